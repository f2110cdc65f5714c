#include "ecl/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ecl/errors.hpp"

namespace ecl {

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw ConfigError("synthetic spec: needs >= 2 classes");
    if (center_mode == CenterMode::simplex && input_dim < num_classes)
        throw ConfigError("synthetic spec: input_dim must be >= C for simplex centers");
    if (input_dim < 1) throw ConfigError("synthetic spec: input_dim must be >= 1");
    if (!(min_center_dist >= 0.0))
        throw ConfigError("synthetic spec: negative min_center_dist");
    if (n_max < 1) throw ConfigError("synthetic spec: n_max must be >= 1");
    if (!(rho >= 1.0)) throw ConfigError("synthetic spec: rho must be >= 1");
    if (!(sigma_class >= 0.0) || !(sigma_aug >= 0.0))
        throw ConfigError("synthetic spec: negative sigma");
    if (!(jitter_lo <= jitter_hi) || !(jitter_lo > 0.0))
        throw ConfigError("synthetic spec: bad jitter range");
    if (n_test_per_class < 1)
        throw ConfigError("synthetic spec: n_test_per_class must be >= 1");
}

std::vector<int> longtail_counts(int num_classes, int n_max, double rho) {
    std::vector<int> counts(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        const double expo = num_classes > 1
                                ? -static_cast<double>(c) / (num_classes - 1)
                                : 0.0;
        const long long n = std::llround(n_max * std::pow(rho, expo));
        counts[static_cast<std::size_t>(c)] = static_cast<int>(std::max(1LL, n));
    }
    return counts;
}

Tensor simplex_centers(int num_classes, int dim, double scale) {
    if (dim < num_classes)
        throw ConfigError("simplex centers need dim >= C");
    // Vertices (e_c - 1/C) in R^C, normalized to unit length and scaled;
    // pairwise cosine is exactly -1/(C-1). Extra axes stay zero.
    const int c_n = num_classes;
    Tensor centers(c_n, dim);
    for (int c = 0; c < c_n; ++c) {
        double sq = 0.0;
        std::vector<double> v(static_cast<std::size_t>(c_n));
        for (int k = 0; k < c_n; ++k) {
            v[static_cast<std::size_t>(k)] = (k == c ? 1.0 : 0.0) - 1.0 / c_n;
            sq += v[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(k)];
        }
        const double inv = scale / std::sqrt(sq);
        for (int k = 0; k < c_n; ++k)
            centers.at(c, k) = v[static_cast<std::size_t>(k)] * inv;
    }
    return centers;
}

Tensor random_centers(int num_classes, int dim, double scale, double min_dist,
                      Rng& rng) {
    Tensor centers(num_classes, dim);
    const double min_sq = min_dist * scale * min_dist * scale;
    for (int c = 0; c < num_classes; ++c) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000)
                throw ConfigError("random centers: min_center_dist infeasible");
            double sq = 0.0;
            for (int k = 0; k < dim; ++k) {
                centers.at(c, k) = rng.normal();
                sq += centers.at(c, k) * centers.at(c, k);
            }
            const double inv = scale / std::sqrt(sq);
            for (int k = 0; k < dim; ++k) centers.at(c, k) *= inv;
            bool ok = true;
            for (int p = 0; p < c && ok; ++p) {
                double d2 = 0.0;
                for (int k = 0; k < dim; ++k) {
                    const double d = centers.at(c, k) - centers.at(p, k);
                    d2 += d * d;
                }
                if (d2 < min_sq) ok = false;
            }
            if (ok) break;
        }
    }
    return centers;
}

std::string to_string(CenterMode m) {
    return m == CenterMode::simplex ? "simplex" : "random";
}

CenterMode center_mode_from_string(const std::string& s) {
    if (s == "simplex") return CenterMode::simplex;
    if (s == "random") return CenterMode::random_units;
    throw ConfigError("unknown center mode: " + s);
}

namespace {

Dataset sample_split(const SyntheticSpec& spec, const Tensor& centers,
                     const std::vector<int>& counts, const std::string& split,
                     Rng& rng) {
    int total = 0;
    for (int n : counts) total += n;
    Dataset ds;
    ds.inputs = Tensor(total, spec.input_dim);
    ds.labels.reserve(static_cast<std::size_t>(total));
    ds.num_classes = spec.num_classes;
    ds.split = split;
    ds.class_counts = counts;
    int row = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int k = 0; k < counts[static_cast<std::size_t>(c)]; ++k) {
            for (int d = 0; d < spec.input_dim; ++d)
                ds.inputs.at(row, d) =
                    centers.at(c, d) + spec.sigma_class * rng.normal();
            ds.labels.push_back(c);
            ++row;
        }
    }
    ds.priors.resize(static_cast<std::size_t>(spec.num_classes));
    for (int c = 0; c < spec.num_classes; ++c)
        ds.priors[static_cast<std::size_t>(c)] =
            static_cast<double>(counts[static_cast<std::size_t>(c)]) / total;
    return ds;
}

}  // namespace

std::pair<Dataset, Dataset> make_longtailed(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Tensor centers =
        spec.center_mode == CenterMode::simplex
            ? simplex_centers(spec.num_classes, spec.input_dim,
                              spec.center_scale)
            : random_centers(spec.num_classes, spec.input_dim,
                             spec.center_scale, spec.min_center_dist, rng);
    const auto train_counts =
        longtail_counts(spec.num_classes, spec.n_max, spec.rho);
    Dataset train = sample_split(spec, centers, train_counts, "train", rng);
    std::vector<int> test_counts(static_cast<std::size_t>(spec.num_classes),
                                 spec.n_test_per_class);
    Dataset test = sample_split(spec, centers, test_counts, "test", rng);
    return {std::move(train), std::move(test)};
}

Tensor augment(const Tensor& x, int view, const SyntheticSpec& spec, Rng& rng) {
    if (view < 1 || view > 3)
        throw ConfigError("augment: view index must be in {1,2,3}");
    Tensor out(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r) {
        const double s = rng.uniform(spec.jitter_lo, spec.jitter_hi);
        for (int c = 0; c < x.cols(); ++c)
            out.at(r, c) = s * (x.at(r, c) + spec.sigma_aug * rng.normal());
    }
    return out;
}

std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng& rng) {
    if (batch_size < 1) throw ConfigError("batches: batch size must be >= 1");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

std::vector<std::vector<int>> make_batches(int n, int batch_size,
                                           std::uint64_t seed) {
    Rng rng(seed);
    return make_batches(n, batch_size, rng);
}

void save_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write dataset: " + path);
    out << "label";
    for (int d = 0; d < ds.inputs.cols(); ++d) out << ",x" << (d + 1);
    out << "\n";
    char buf[48];
    for (int r = 0; r < ds.size(); ++r) {
        out << ds.labels[static_cast<std::size_t>(r)];
        for (int d = 0; d < ds.inputs.cols(); ++d) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.inputs.at(r, d));
            out << ',' << buf;
        }
        out << "\n";
    }
}

Dataset load_dataset_csv(const std::string& path, const std::string& split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read dataset: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("dataset " + path + ": empty file");
    if (line.rfind("label", 0) != 0)
        throw ConfigError("dataset " + path + ": bad header (line 1)");
    std::vector<double> values;
    std::vector<int> labels;
    int cols = -1;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool first = true;
        int label = -1;
        while (std::getline(ss, cell, ',')) {
            try {
                if (first) {
                    label = std::stoi(cell);
                    first = false;
                } else {
                    row.push_back(std::stod(cell));
                }
            } catch (const std::exception&) {
                throw ConfigError("dataset " + path + ": bad value at line " +
                                  std::to_string(lineno));
            }
        }
        if (first || label < 0)
            throw ConfigError("dataset " + path + ": bad label at line " +
                              std::to_string(lineno));
        if (cols < 0) cols = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != cols)
            throw ConfigError("dataset " + path + ": ragged row at line " +
                              std::to_string(lineno));
        labels.push_back(label);
        values.insert(values.end(), row.begin(), row.end());
    }
    if (labels.empty()) throw ConfigError("dataset " + path + ": no rows");
    Dataset ds;
    ds.inputs = Tensor::from_data(static_cast<int>(labels.size()), cols,
                                  std::move(values));
    int max_label = 0;
    for (int y : labels) max_label = std::max(max_label, y);
    ds.num_classes = max_label + 1;
    ds.labels = std::move(labels);
    ds.split = split;
    ds.class_counts.assign(static_cast<std::size_t>(ds.num_classes), 0);
    for (int y : ds.labels) ds.class_counts[static_cast<std::size_t>(y)]++;
    ds.priors.resize(static_cast<std::size_t>(ds.num_classes));
    for (int c = 0; c < ds.num_classes; ++c)
        ds.priors[static_cast<std::size_t>(c)] =
            static_cast<double>(ds.class_counts[static_cast<std::size_t>(c)]) /
            ds.size();
    return ds;
}

void save_priors_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write priors: " + path);
    out << "class,count,prior\n";
    char buf[48];
    for (int c = 0; c < ds.num_classes; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g",
                      ds.priors[static_cast<std::size_t>(c)]);
        out << c << ',' << ds.class_counts[static_cast<std::size_t>(c)] << ','
            << buf << "\n";
    }
}

}  // namespace ecl
