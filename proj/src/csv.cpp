#include "ecl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ecl/errors.hpp"

namespace ecl {

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_history_csv(const std::string& path, const TrainHistory& history,
                       int num_classes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write history: " + path);
    out << "epoch,fc,ms,sd,acc_overall";
    for (int c = 0; c < num_classes; ++c) out << ",acc_c" << (c + 1);
    out << ",l_bc_ecl,l_cc_ge,l_lc,l_total,lr\n";
    for (const auto& r : history.records) {
        out << r.epoch << ',' << format_double(r.geometry.fc) << ','
            << format_double(r.geometry.ms) << ',' << format_double(r.geometry.sd)
            << ',' << format_double(r.acc_overall);
        for (double a : r.acc_per_class) out << ',' << format_double(a);
        out << ',' << format_double(r.l_bc_ecl) << ',' << format_double(r.l_cc_ge)
            << ',' << format_double(r.l_lc) << ',' << format_double(r.l_total)
            << ',' << format_double(r.lr) << "\n";
    }
}

void write_pca_csv(const std::string& path, const Tensor& coords,
                   const std::vector<int>& labels) {
    if (coords.rows() != static_cast<int>(labels.size()))
        throw ShapeError("pca csv: coords/labels size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write pca csv: " + path);
    out << "id,label,pc1,pc2\n";
    for (int r = 0; r < coords.rows(); ++r)
        out << r << ',' << labels[static_cast<std::size_t>(r)] << ','
            << format_double(coords.at(r, 0)) << ','
            << format_double(coords.at(r, 1)) << "\n";
}

void write_embeddings_csv(const std::string& path, const Tensor& features,
                          const std::vector<int>& labels) {
    if (features.rows() != static_cast<int>(labels.size()))
        throw ShapeError("embeddings csv: features/labels size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write embeddings: " + path);
    out << "id,label";
    for (int d = 0; d < features.cols(); ++d) out << ",dim" << (d + 1);
    out << "\n";
    for (int r = 0; r < features.rows(); ++r) {
        out << r << ',' << labels[static_cast<std::size_t>(r)];
        for (int d = 0; d < features.cols(); ++d)
            out << ',' << format_double(features.at(r, d));
        out << "\n";
    }
}

EmbeddingsFile read_embeddings_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read embeddings: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,label", 0) != 0)
        throw ConfigError("embeddings " + path +
                          ": bad header (line 1), expected id,label,dim1..");
    std::vector<double> values;
    std::vector<int> labels;
    int cols = -1;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3)
            throw ConfigError("embeddings " + path + ": too few columns at line " +
                              std::to_string(lineno));
        try {
            labels.push_back(std::stoi(cells[1]));
            for (std::size_t k = 2; k < cells.size(); ++k)
                values.push_back(std::stod(cells[k]));
        } catch (const std::exception&) {
            throw ConfigError("embeddings " + path + ": bad value at line " +
                              std::to_string(lineno));
        }
        const int row_cols = static_cast<int>(cells.size()) - 2;
        if (cols < 0) cols = row_cols;
        if (row_cols != cols)
            throw ConfigError("embeddings " + path + ": ragged row at line " +
                              std::to_string(lineno));
        if (labels.back() < 0)
            throw ConfigError("embeddings " + path + ": negative label at line " +
                              std::to_string(lineno));
    }
    if (labels.empty()) throw ConfigError("embeddings " + path + ": no rows");
    EmbeddingsFile f;
    f.features = Tensor::from_data(static_cast<int>(labels.size()), cols,
                                   std::move(values));
    int mx = 0;
    for (int y : labels) mx = std::max(mx, y);
    f.num_classes = mx + 1;
    f.labels = std::move(labels);
    return f;
}

void write_metrics_csv(const std::string& path, double fc, double ms,
                       const double* sd) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write metrics: " + path);
    out << "fc,ms" << (sd != nullptr ? ",sd" : "") << "\n";
    out << format_double(fc) << ',' << format_double(ms);
    if (sd != nullptr) out << ',' << format_double(*sd);
    out << "\n";
}

}  // namespace ecl
