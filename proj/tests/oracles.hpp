// Independent brute-force oracles. Plain double loops on plain vectors, no
// tape, no kernels, written straight from the displayed formulas; these stay
// independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;  // row-major

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> unit(std::vector<double> v) {
    double n = std::sqrt(dot(v, v));
    for (auto& x : v) x /= n;
    return v;
}

// protos: C columns given as vectors (already the raw prototype vectors;
// normalized here exactly like the engine does before the dot products).
struct Problem {
    Mat z;                    // |B| x F, unit rows
    std::vector<int> labels;  // 0-based
    int num_classes = 0;
    Mat protos;               // C x F (prototype per row, raw)
};

inline Mat normalized_protos(const Problem& p) {
    Mat out;
    for (const auto& row : p.protos) out.push_back(unit(row));
    return out;
}

inline std::vector<std::vector<int>> class_rows(const Problem& p) {
    std::vector<std::vector<int>> by(static_cast<std::size_t>(p.num_classes));
    for (std::size_t i = 0; i < p.labels.size(); ++i)
        by[static_cast<std::size_t>(p.labels[i])].push_back(static_cast<int>(i));
    return by;
}

// Literal per-pair evaluation of the balanced class-wise equilibrium loss:
// numerator exp((z_i.z_j + z_i.z_py)/(2 tau)); denominator sums per class
// the class-average of exp(z_i.z_k/tau) plus exp(z_i.z_pc/tau); the own
// class averages over P(i) unless include_anchor.
inline double bc_ecl(const Problem& p, double tau, bool include_anchor = false) {
    const Mat protos = normalized_protos(p);
    const auto by = class_rows(p);
    const int n = static_cast<int>(p.z.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = p.labels[static_cast<std::size_t>(i)];
        std::vector<int> pos;
        for (int j : by[static_cast<std::size_t>(y)])
            if (j != i) pos.push_back(j);
        double denom = 0.0;
        for (int c = 0; c < p.num_classes; ++c) {
            std::vector<int> rows = by[static_cast<std::size_t>(c)];
            if (c == y && !include_anchor) rows = pos;
            if (!rows.empty()) {
                double avg = 0.0;
                for (int k : rows)
                    avg += std::exp(dot(p.z[static_cast<std::size_t>(i)],
                                        p.z[static_cast<std::size_t>(k)]) /
                                    tau);
                denom += avg / static_cast<double>(rows.size());
            }
            denom += std::exp(dot(p.z[static_cast<std::size_t>(i)],
                                  protos[static_cast<std::size_t>(c)]) /
                              tau);
        }
        double anchor_term = 0.0;
        const double zpy = dot(p.z[static_cast<std::size_t>(i)],
                               protos[static_cast<std::size_t>(y)]);
        for (int j : pos) {
            const double num = std::exp((dot(p.z[static_cast<std::size_t>(i)],
                                             p.z[static_cast<std::size_t>(j)]) +
                                         zpy) /
                                        (2.0 * tau));
            anchor_term += -std::log(num / denom);
        }
        total += anchor_term / static_cast<double>(pos.size());
    }
    return total / n;
}

// Literal per-pair evaluation of the prototype-augmented balanced loss:
// positives P(i) plus the own-class prototype with weight 1/(|P(i)|+1);
// per-class denominator averages B_c plus the prototype with weight
// 1/(|B_c|+1); own class excludes the anchor unless include_anchor.
inline double bcl(const Problem& p, double tau, bool include_anchor = false) {
    const Mat protos = normalized_protos(p);
    const auto by = class_rows(p);
    const int n = static_cast<int>(p.z.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = p.labels[static_cast<std::size_t>(i)];
        std::vector<int> pos;
        for (int j : by[static_cast<std::size_t>(y)])
            if (j != i) pos.push_back(j);
        double denom = 0.0;
        for (int c = 0; c < p.num_classes; ++c) {
            std::vector<int> rows = by[static_cast<std::size_t>(c)];
            if (c == y && !include_anchor) rows = pos;
            double s = std::exp(dot(p.z[static_cast<std::size_t>(i)],
                                    protos[static_cast<std::size_t>(c)]) /
                                tau);
            for (int k : rows)
                s += std::exp(dot(p.z[static_cast<std::size_t>(i)],
                                  p.z[static_cast<std::size_t>(k)]) /
                              tau);
            denom += s / static_cast<double>(rows.size() + 1);
        }
        double anchor_term = 0.0;
        for (int j : pos)
            anchor_term += -std::log(
                std::exp(dot(p.z[static_cast<std::size_t>(i)],
                             p.z[static_cast<std::size_t>(j)]) /
                         tau) /
                denom);
        anchor_term += -std::log(
            std::exp(dot(p.z[static_cast<std::size_t>(i)],
                         protos[static_cast<std::size_t>(y)]) /
                     tau) /
            denom);
        total += anchor_term / static_cast<double>(pos.size() + 1);
    }
    return total / n;
}

// Attraction/repulsion bound at tau = 1 for the balanced class-wise loss;
// empty classes contribute the prototype similarity at full weight.
inline double bc_ecl_bound(const Problem& p) {
    const Mat protos = normalized_protos(p);
    const auto by = class_rows(p);
    const int n = static_cast<int>(p.z.size());
    const int c_n = p.num_classes;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = p.labels[static_cast<std::size_t>(i)];
        std::vector<int> pos;
        for (int j : by[static_cast<std::size_t>(y)])
            if (j != i) pos.push_back(j);
        double a = 0.0;
        const double zpy = dot(p.z[static_cast<std::size_t>(i)],
                               protos[static_cast<std::size_t>(y)]);
        for (int j : pos)
            a += dot(p.z[static_cast<std::size_t>(i)],
                     p.z[static_cast<std::size_t>(j)]) +
                 zpy;
        a /= 2.0 * static_cast<double>(pos.size());
        double r = 0.0;
        for (int c = 0; c < c_n; ++c) {
            if (c == y) continue;
            const auto& rows = by[static_cast<std::size_t>(c)];
            const double zpc = dot(p.z[static_cast<std::size_t>(i)],
                                   protos[static_cast<std::size_t>(c)]);
            if (rows.empty()) {
                r += 2.0 * zpc;
            } else {
                double s = 0.0;
                for (int k : rows)
                    s += dot(p.z[static_cast<std::size_t>(i)],
                             p.z[static_cast<std::size_t>(k)]) +
                         zpc;
                r += s / static_cast<double>(rows.size());
            }
        }
        r /= 2.0 * static_cast<double>(c_n - 1);
        total += std::log(1.0 + (c_n - 1) * std::exp(r - a));
    }
    return total / n;
}

inline double bcl_bound(const Problem& p) {
    const Mat protos = normalized_protos(p);
    const auto by = class_rows(p);
    const int n = static_cast<int>(p.z.size());
    const int c_n = p.num_classes;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = p.labels[static_cast<std::size_t>(i)];
        std::vector<int> pos;
        for (int j : by[static_cast<std::size_t>(y)])
            if (j != i) pos.push_back(j);
        double a = dot(p.z[static_cast<std::size_t>(i)],
                       protos[static_cast<std::size_t>(y)]);
        for (int j : pos)
            a += dot(p.z[static_cast<std::size_t>(i)],
                     p.z[static_cast<std::size_t>(j)]);
        a /= static_cast<double>(pos.size() + 1);
        double r = 0.0;
        for (int c = 0; c < c_n; ++c) {
            if (c == y) continue;
            const auto& rows = by[static_cast<std::size_t>(c)];
            double s = dot(p.z[static_cast<std::size_t>(i)],
                           protos[static_cast<std::size_t>(c)]);
            for (int k : rows)
                s += dot(p.z[static_cast<std::size_t>(i)],
                         p.z[static_cast<std::size_t>(k)]);
            r += s / static_cast<double>(rows.size() + 1);
        }
        r /= static_cast<double>(c_n - 1);
        total += std::log(1.0 + (c_n - 1) * std::exp(r - a));
    }
    return total / n;
}

inline double cc_ge(const Mat& w, const Mat& protos_cols_by_row) {
    // w: C x F; protos given as F x C
    double nw = 0.0;
    for (const auto& row : w)
        for (double v : row) nw += v * v;
    nw = std::sqrt(nw);
    double np = 0.0;
    for (const auto& row : protos_cols_by_row)
        for (double v : row) np += v * v;
    np = std::sqrt(np);
    double sq = 0.0;
    const int f = static_cast<int>(protos_cols_by_row.size());
    const int c_n = static_cast<int>(protos_cols_by_row[0].size());
    for (int a = 0; a < f; ++a)
        for (int b = 0; b < c_n; ++b) {
            const double d =
                w[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] / nw -
                protos_cols_by_row[static_cast<std::size_t>(a)]
                                  [static_cast<std::size_t>(b)] /
                    np;
            sq += d * d;
        }
    return sq;
}

inline double lc(const Mat& logits, const std::vector<int>& labels,
                 const std::vector<double>& priors) {
    const int n = static_cast<int>(logits.size());
    const int c_n = static_cast<int>(priors.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double denom = 0.0;
        for (int c = 0; c < c_n; ++c)
            denom += std::exp(logits[static_cast<std::size_t>(i)]
                                    [static_cast<std::size_t>(c)] +
                              std::log(priors[static_cast<std::size_t>(c)]));
        const int y = labels[static_cast<std::size_t>(i)];
        total += -std::log(
            std::exp(logits[static_cast<std::size_t>(i)][static_cast<std::size_t>(y)] +
                     std::log(priors[static_cast<std::size_t>(y)])) /
            denom);
    }
    return total / n;
}

inline double fc(const Mat& feats, const std::vector<int>& labels, int c_n) {
    double acc = 0.0;
    for (int c = 0; c < c_n; ++c) {
        std::vector<int> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) rows.push_back(static_cast<int>(i));
        double s = 0.0;
        for (int i : rows)
            for (int j : rows) {
                double sq = 0.0;
                for (std::size_t k = 0; k < feats[0].size(); ++k) {
                    const double d = feats[static_cast<std::size_t>(i)][k] -
                                     feats[static_cast<std::size_t>(j)][k];
                    sq += d * d;
                }
                s += std::sqrt(sq);
            }
        acc += s / (static_cast<double>(rows.size()) * rows.size());
    }
    return acc / c_n;
}

inline double ms(const Mat& feats, const std::vector<int>& labels, int c_n) {
    const std::size_t d = feats[0].size();
    Mat means(static_cast<std::size_t>(c_n), std::vector<double>(d, 0.0));
    std::vector<int> counts(static_cast<std::size_t>(c_n), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k)
            means[static_cast<std::size_t>(labels[i])][k] += feats[i][k];
        counts[static_cast<std::size_t>(labels[i])]++;
    }
    for (int c = 0; c < c_n; ++c)
        for (std::size_t k = 0; k < d; ++k)
            means[static_cast<std::size_t>(c)][k] /= counts[static_cast<std::size_t>(c)];
    double acc = 0.0;
    for (int a = 0; a < c_n; ++a)
        for (int b = 0; b < c_n; ++b) {
            if (a == b) continue;
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = means[static_cast<std::size_t>(a)][k] -
                                    means[static_cast<std::size_t>(b)][k];
                sq += diff * diff;
            }
            acc += std::sqrt(sq);
        }
    return acc / (static_cast<double>(c_n) * (c_n - 1));
}

inline double sd(const Mat& w, const Mat& feats, const std::vector<int>& labels,
                 int c_n) {
    const std::size_t d = feats[0].size();
    Mat means(static_cast<std::size_t>(c_n), std::vector<double>(d, 0.0));
    std::vector<int> counts(static_cast<std::size_t>(c_n), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k)
            means[static_cast<std::size_t>(labels[i])][k] += feats[i][k];
        counts[static_cast<std::size_t>(labels[i])]++;
    }
    for (int c = 0; c < c_n; ++c)
        for (std::size_t k = 0; k < d; ++k)
            means[static_cast<std::size_t>(c)][k] /= counts[static_cast<std::size_t>(c)];
    std::vector<double> global(d, 0.0);
    for (int c = 0; c < c_n; ++c)
        for (std::size_t k = 0; k < d; ++k)
            global[k] += means[static_cast<std::size_t>(c)][k] / c_n;
    double nw = 0.0, nm = 0.0;
    for (int c = 0; c < c_n; ++c)
        for (std::size_t k = 0; k < d; ++k) {
            nw += w[static_cast<std::size_t>(c)][k] * w[static_cast<std::size_t>(c)][k];
            const double m = means[static_cast<std::size_t>(c)][k] - global[k];
            nm += m * m;
        }
    nw = std::sqrt(nw);
    nm = std::sqrt(nm);
    double sq = 0.0;
    for (int c = 0; c < c_n; ++c)
        for (std::size_t k = 0; k < d; ++k) {
            const double m = means[static_cast<std::size_t>(c)][k] - global[k];
            const double diff = w[static_cast<std::size_t>(c)][k] / nw - m / nm;
            sq += diff * diff;
        }
    return std::sqrt(sq);
}

// Jacobi eigenvalues of a symmetric matrix (for the PCA oracle).
inline std::vector<double> symmetric_eigenvalues(Mat m) {
    const int n = static_cast<int>(m.size());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                off += m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                       m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = m[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
                if (std::abs(apq) < 1e-300) continue;
                const double app = m[static_cast<std::size_t>(p)][static_cast<std::size_t>(p)];
                const double aqq = m[static_cast<std::size_t>(q)][static_cast<std::size_t>(q)];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double akp = m[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)];
                    const double akq = m[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)];
                    m[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] = c * akp - s * akq;
                    m[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = m[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
                    const double aqk = m[static_cast<std::size_t>(q)][static_cast<std::size_t>(k)];
                    m[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = c * apk - s * aqk;
                    m[static_cast<std::size_t>(q)][static_cast<std::size_t>(k)] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        eig[static_cast<std::size_t>(i)] =
            m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    return eig;
}

}  // namespace oracle
