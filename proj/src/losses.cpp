#include "ecl/losses.hpp"

#include <cmath>
#include <string>

#include "ecl/errors.hpp"
#include "ecl/kernels.hpp"

namespace ecl {

namespace {

void check_contrastive_pre(const BatchIndex& idx, int n, double tau) {
    if (!(tau > 0.0)) throw ConfigError("contrastive loss: tau must be > 0");
    if (n == 0) throw ShapeError("contrastive loss: empty batch");
    if (idx.num_classes < 2)
        throw ShapeError("contrastive loss: needs at least 2 classes, got " +
                         std::to_string(idx.num_classes));
}

// Column-normalize the raw prototype matrix on the tape.
Value normalized_protos(Tape& t, Value protos) {
    return t.transpose(t.row_l2_normalize(t.transpose(protos)));
}

// C x n class indicator matrix: row c marks the members of B_c.
Tensor class_indicator(const BatchIndex& idx, int n) {
    Tensor ind(idx.num_classes, n);
    for (int c = 0; c < idx.num_classes; ++c)
        for (int r : idx.class_rows[static_cast<std::size_t>(c)])
            ind.at(c, r) = 1.0;
    return ind;
}

Tensor proto_col_normalized(const Tensor& raw) {
    Tensor p = raw;
    for (int c = 0; c < p.cols(); ++c) {
        double sq = 0.0;
        for (int r = 0; r < p.rows(); ++r) sq += p.at(r, c) * p.at(r, c);
        const double nrm = std::sqrt(sq);
        if (!(nrm > 0.0))
            throw DomainError("prototype column " + std::to_string(c) +
                              " has zero norm");
        for (int r = 0; r < p.rows(); ++r) p.at(r, c) /= nrm;
    }
    return p;
}

}  // namespace

namespace tapeops {

Value bc_ecl_loss(Tape& t, Value z, const BatchIndex& idx, Value protos,
                  double tau, bool own_class_includes_anchor) {
    const int n = t.value(z).rows();
    check_contrastive_pre(idx, n, tau);
    const int C = idx.num_classes;

    Value pn = normalized_protos(t, protos);
    Value sims = t.matmul(z, t.transpose(z));          // n x n
    Value psims = t.matmul(z, pn);                     // n x C
    Value e = t.exp(t.scale(sims, 1.0 / tau));
    Value ep = t.exp(t.scale(psims, 1.0 / tau));

    Value ind = t.constant(class_indicator(idx, n));   // C x n
    Value eye_n = t.constant(Tensor::identity(n));
    Value eye_c = t.constant(Tensor::identity(C));

    Value total;
    for (int i = 0; i < n; ++i) {
        const int y = idx.labels[static_cast<std::size_t>(i)];
        const auto& pos = idx.positives[static_cast<std::size_t>(i)];
        const int m = static_cast<int>(pos.size());

        // Denominator: per class, class-average of exp similarities plus the
        // prototype term. Own class averages over P(i) unless the main-text
        // convention is requested; an empty class keeps only its prototype.
        Value denom;
        Value e_ii = t.dot_row(e, i, eye_n, i);
        for (int c = 0; c < C; ++c) {
            const int nc = static_cast<int>(
                idx.class_rows[static_cast<std::size_t>(c)].size());
            Value proto_term = t.dot_row(ep, i, eye_c, c);
            Value term;
            if (c == y && !own_class_includes_anchor) {
                Value csum = t.subtract(t.dot_row(e, i, ind, c), e_ii);
                term = t.add(t.scale(csum, 1.0 / m), proto_term);
            } else if (nc > 0) {
                Value avg = t.scale(t.dot_row(e, i, ind, c), 1.0 / nc);
                term = t.add(avg, proto_term);
            } else {
                term = proto_term;
            }
            denom = denom.valid() ? t.add(denom, term) : term;
        }

        // Positive part: mean over P(i) of (z_i.z_j + z_i.z_p_y) / (2 tau).
        Value s_ii = t.dot_row(sims, i, eye_n, i);
        Value pos_sum = t.subtract(t.dot_row(sims, i, ind, y), s_ii);
        Value attract = t.scale(
            t.add(t.scale(pos_sum, 1.0 / m), t.dot_row(psims, i, eye_c, y)),
            1.0 / (2.0 * tau));

        Value term_i = t.subtract(t.log(denom), attract);
        total = total.valid() ? t.add(total, term_i) : term_i;
    }
    return t.scale(total, 1.0 / n);
}

Value bcl_loss(Tape& t, Value z, const BatchIndex& idx, Value protos,
               double tau, bool own_class_includes_anchor) {
    const int n = t.value(z).rows();
    check_contrastive_pre(idx, n, tau);
    const int C = idx.num_classes;

    Value pn = normalized_protos(t, protos);
    Value sims = t.matmul(z, t.transpose(z));
    Value psims = t.matmul(z, pn);
    Value e = t.exp(t.scale(sims, 1.0 / tau));
    Value ep = t.exp(t.scale(psims, 1.0 / tau));

    Value ind = t.constant(class_indicator(idx, n));
    Value eye_n = t.constant(Tensor::identity(n));
    Value eye_c = t.constant(Tensor::identity(C));

    Value total;
    for (int i = 0; i < n; ++i) {
        const int y = idx.labels[static_cast<std::size_t>(i)];
        const auto& pos = idx.positives[static_cast<std::size_t>(i)];
        const int m = static_cast<int>(pos.size());

        // Denominator: per class, (sum over B_c + prototype) / (|B_c| + 1);
        // the prototype rides inside the class average here.
        Value denom;
        Value e_ii = t.dot_row(e, i, eye_n, i);
        for (int c = 0; c < C; ++c) {
            const int nc = static_cast<int>(
                idx.class_rows[static_cast<std::size_t>(c)].size());
            Value proto_term = t.dot_row(ep, i, eye_c, c);
            Value csum = t.dot_row(e, i, ind, c);
            int count = nc;
            if (c == y && !own_class_includes_anchor) {
                csum = t.subtract(csum, e_ii);
                count = m;
            }
            Value term = t.scale(t.add(csum, proto_term), 1.0 / (count + 1));
            denom = denom.valid() ? t.add(denom, term) : term;
        }

        // Positives averaged over P(i) plus the own-class prototype.
        Value s_ii = t.dot_row(sims, i, eye_n, i);
        Value pos_sum = t.subtract(t.dot_row(sims, i, ind, y), s_ii);
        Value attract =
            t.scale(t.add(pos_sum, t.dot_row(psims, i, eye_c, y)),
                    1.0 / (static_cast<double>(m + 1) * tau));

        Value term_i = t.subtract(t.log(denom), attract);
        total = total.valid() ? t.add(total, term_i) : term_i;
    }
    return t.scale(total, 1.0 / n);
}

Value cc_ge_loss(Tape& t, Value w, Value protos) {
    const Tensor& wv = t.value(w);
    const Tensor& pv = t.value(protos);
    if (wv.cols() != pv.rows() || wv.rows() != pv.cols())
        throw ShapeError("cc_ge: W " + wv.shape_str() + " does not match P " +
                         pv.shape_str());
    if (!(t_frobenius(wv) > 0.0)) throw DomainError("cc_ge: zero-norm W");
    if (!(t_frobenius(pv) > 0.0)) throw DomainError("cc_ge: zero-norm P");
    Value wt = t.transpose(w);
    Value wn = t.scale_by(wt, t.reciprocal(t.frobenius_norm(w)));
    Value pnn = t.scale_by(protos, t.reciprocal(t.frobenius_norm(protos)));
    Value d = t.subtract(wn, pnn);
    return t.sum(t.multiply(d, d));
}

Value lc_loss(Tape& t, Value logits, const std::vector<int>& labels,
              const std::vector<double>& priors) {
    const Tensor& lv = t.value(logits);
    const int n = lv.rows();
    const int C = lv.cols();
    if (n == 0) throw ShapeError("lc: empty batch");
    if (static_cast<int>(labels.size()) != n)
        throw ShapeError("lc: label count mismatch");
    if (static_cast<int>(priors.size()) != C)
        throw ConfigError("lc: " + std::to_string(priors.size()) +
                          " priors for " + std::to_string(C) + " classes");
    for (int c = 0; c < C; ++c)
        if (!(priors[static_cast<std::size_t>(c)] > 0.0))
            throw ConfigError("lc: prior h_" + std::to_string(c) + " <= 0");
    for (int i = 0; i < n; ++i)
        if (labels[static_cast<std::size_t>(i)] < 0 ||
            labels[static_cast<std::size_t>(i)] >= C)
            throw ShapeError("lc: label out of range at row " + std::to_string(i));

    Tensor logh(n, C);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c)
            logh.at(i, c) = std::log(priors[static_cast<std::size_t>(c)]);
    Value comp = t.add(logits, t.constant(std::move(logh)));

    // Row-max shift: exact softmax identity, keeps exp in range.
    const Tensor& cv = t.value(comp);
    Tensor shift(n, C);
    Tensor shift_vec(n, 1);
    for (int i = 0; i < n; ++i) {
        double mx = cv.at(i, 0);
        for (int c = 1; c < C; ++c) mx = std::max(mx, cv.at(i, c));
        shift_vec.at(i, 0) = mx;
        for (int c = 0; c < C; ++c) shift.at(i, c) = mx;
    }
    Value shifted = t.subtract(comp, t.constant(std::move(shift)));
    Value rowsum = t.matmul(t.exp(shifted), t.constant(Tensor::ones(C, 1)));
    Value lse = t.add(t.log(rowsum), t.constant(std::move(shift_vec)));

    Tensor sel(n, C);
    for (int i = 0; i < n; ++i)
        sel.at(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    Value picked = t.sum(t.multiply(comp, t.constant(std::move(sel))));

    return t.scale(t.subtract(t.sum(lse), picked), 1.0 / n);
}

Value total_loss(Tape& t, Value l_bc_ecl, Value l_cc_ge, Value l_lc,
                 double lambda_bc_ecl, double lambda_cc_ge, double lambda_lc) {
    if (lambda_bc_ecl < 0.0 || lambda_cc_ge < 0.0 || lambda_lc < 0.0)
        throw ConfigError("total loss: negative lambda");
    return t.add(t.add(t.scale(l_bc_ecl, lambda_bc_ecl),
                       t.scale(l_cc_ge, lambda_cc_ge)),
                 t.scale(l_lc, lambda_lc));
}

}  // namespace tapeops

double bc_ecl_loss(const ContrastBatch& batch, const PrototypeSet& protos,
                   double tau, bool own_class_includes_anchor) {
    Tape t;
    Value z = t.constant(batch.z);
    Value p = t.constant(protos.p);
    return t.value(tapeops::bc_ecl_loss(t, z, batch.index, p, tau,
                                        own_class_includes_anchor))
        .at(0, 0);
}

double bcl_loss(const ContrastBatch& batch, const PrototypeSet& protos,
                double tau, bool own_class_includes_anchor) {
    Tape t;
    Value z = t.constant(batch.z);
    Value p = t.constant(protos.p);
    return t.value(tapeops::bcl_loss(t, z, batch.index, p, tau,
                                     own_class_includes_anchor))
        .at(0, 0);
}

double cc_ge_loss(const Tensor& w, const PrototypeSet& protos) {
    Tape t;
    return t.value(tapeops::cc_ge_loss(t, t.constant(w), t.constant(protos.p)))
        .at(0, 0);
}

double lc_loss(const Tensor& logits, const std::vector<int>& labels,
               const std::vector<double>& priors) {
    Tape t;
    return t.value(tapeops::lc_loss(t, t.constant(logits), labels, priors))
        .at(0, 0);
}

double bc_ecl_bound(const ContrastBatch& batch, const PrototypeSet& protos) {
    const BatchIndex& idx = batch.index;
    const int n = batch.size();
    const int C = idx.num_classes;
    if (C < 2) throw ShapeError("bc_ecl_bound: needs at least 2 classes");
    const Tensor pn = proto_col_normalized(protos.p);
    const std::size_t f = static_cast<std::size_t>(batch.z.cols());

    auto zdot = [&](int i, int k) {
        return kernels::dot(batch.z.row_ptr(i), batch.z.row_ptr(k), f);
    };
    auto pdot = [&](int i, int c) {
        double s = 0.0;
        for (int r = 0; r < pn.rows(); ++r) s += batch.z.at(i, r) * pn.at(r, c);
        return s;
    };

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = idx.labels[static_cast<std::size_t>(i)];
        const auto& pos = idx.positives[static_cast<std::size_t>(i)];

        // A(i): mean over P(i) of (z_i.z_j + z_i.z_p_y) / 2   (Eq. S8)
        double ps = 0.0;
        for (int j : pos) ps += zdot(i, j);
        const double attract =
            0.5 * (ps / static_cast<double>(pos.size()) + pdot(i, y));

        // R(i): per-class exponents averaged over the C-1 other classes
        // (Eq. S9); an empty class contributes its prototype similarity at
        // full weight, the degenerate case of the AM-GM step.
        double rsum = 0.0;
        for (int c = 0; c < C; ++c) {
            if (c == y) continue;
            const auto& rows = idx.class_rows[static_cast<std::size_t>(c)];
            if (rows.empty()) {
                rsum += 2.0 * pdot(i, c);
            } else {
                double cs = 0.0;
                for (int k : rows) cs += zdot(i, k);
                rsum += cs / static_cast<double>(rows.size()) + pdot(i, c);
            }
        }
        const double repulse = rsum / (2.0 * (C - 1));
        acc += std::log1p((C - 1) * std::exp(repulse - attract));
    }
    return acc / n;
}

double bcl_bound(const ContrastBatch& batch, const PrototypeSet& protos) {
    const BatchIndex& idx = batch.index;
    const int n = batch.size();
    const int C = idx.num_classes;
    if (C < 2) throw ShapeError("bcl_bound: needs at least 2 classes");
    const Tensor pn = proto_col_normalized(protos.p);
    const std::size_t f = static_cast<std::size_t>(batch.z.cols());

    auto zdot = [&](int i, int k) {
        return kernels::dot(batch.z.row_ptr(i), batch.z.row_ptr(k), f);
    };
    auto pdot = [&](int i, int c) {
        double s = 0.0;
        for (int r = 0; r < pn.rows(); ++r) s += batch.z.at(i, r) * pn.at(r, c);
        return s;
    };

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = idx.labels[static_cast<std::size_t>(i)];
        const auto& pos = idx.positives[static_cast<std::size_t>(i)];

        double ps = 0.0;
        for (int j : pos) ps += zdot(i, j);
        const double attract =
            (ps + pdot(i, y)) / static_cast<double>(pos.size() + 1);

        double rsum = 0.0;
        for (int c = 0; c < C; ++c) {
            if (c == y) continue;
            const auto& rows = idx.class_rows[static_cast<std::size_t>(c)];
            double cs = 0.0;
            for (int k : rows) cs += zdot(i, k);
            rsum += (cs + pdot(i, c)) / static_cast<double>(rows.size() + 1);
        }
        const double repulse = rsum / static_cast<double>(C - 1);
        acc += std::log1p((C - 1) * std::exp(repulse - attract));
    }
    return acc / n;
}

std::vector<double> batch_frequency_priors(const std::vector<int>& labels,
                                           int num_classes) {
    const double n = static_cast<double>(labels.size());
    const double floor = 1.0 / (n * num_classes);
    std::vector<double> h(static_cast<std::size_t>(num_classes), 0.0);
    for (int y : labels) h[static_cast<std::size_t>(y)] += 1.0 / n;
    for (auto& v : h) v = std::max(v, floor);
    return h;
}

}  // namespace ecl
