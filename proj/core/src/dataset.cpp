#include "geoadex/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace geoadex {

namespace {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

double parse_double(std::string_view tok, std::int64_t line_no, const char* what) {
    double value = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw parse_error("line " + std::to_string(line_no) + ": bad " + what + " '" +
                          std::string(tok) + "'");
    }
    return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

/// Remaps arbitrary label values to {0..c-1}, preserving the sort order of
/// the original values.
std::vector<std::int32_t> remap_labels(const std::vector<double>& raw, std::int32_t& num_classes) {
    std::map<double, std::int32_t> order;
    for (double v : raw) order.emplace(v, 0);
    std::int32_t next = 0;
    for (auto& [value, idx] : order) idx = next++;
    std::vector<std::int32_t> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = order.at(raw[i]);
    num_classes = next;
    return out;
}

}  // namespace

Vector NormalizationParams::apply(const Vector& x) const {
    if (identity()) return x;
    Vector out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double range = feature_range[static_cast<std::size_t>(j)];
        out[j] = range > 0 ? (x[j] - feature_min[static_cast<std::size_t>(j)]) / range : 0.0;
    }
    return out;
}

std::string Dataset::fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    const std::int64_t shape[3] = {size(), dim(), num_classes};
    h = fnv1a64(shape, sizeof(shape), h);
    for (std::int64_t i = 0; i < size(); ++i) {
        for (std::int64_t j = 0; j < dim(); ++j) {
            const double v = points(i, j);
            h = fnv1a64(&v, sizeof(v), h);
        }
        h = fnv1a64(&labels[static_cast<std::size_t>(i)], sizeof(std::int32_t), h);
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Dataset::validate() const {
    if (static_cast<std::int64_t>(labels.size()) != size())
        throw std::invalid_argument("label count does not match point count");
    for (std::int32_t y : labels)
        if (y < 0 || y >= num_classes) throw std::invalid_argument("label out of range");
    if (!points.allFinite()) throw std::invalid_argument("non-finite coordinate");
}

Dataset load_libsvm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");

    std::vector<double> raw_labels;
    std::vector<std::vector<std::pair<std::int64_t, double>>> rows;
    std::int64_t max_feature = 0;

    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        raw_labels.push_back(parse_double(toks[0], line_no, "label"));
        std::vector<std::pair<std::int64_t, double>> row;
        for (std::size_t t = 1; t < toks.size(); ++t) {
            auto tok = toks[t];
            if (tok[0] == '#') break;  // trailing comment
            auto colon = tok.find(':');
            if (colon == std::string_view::npos)
                throw parse_error("line " + std::to_string(line_no) + ": expected idx:val, got '" +
                                  std::string(tok) + "'");
            const double idx_d = parse_double(tok.substr(0, colon), line_no, "feature index");
            const auto idx = static_cast<std::int64_t>(idx_d);
            if (idx < 1 || idx_d != static_cast<double>(idx))
                throw parse_error("line " + std::to_string(line_no) + ": feature index must be a positive integer");
            const double val = parse_double(tok.substr(colon + 1), line_no, "feature value");
            row.emplace_back(idx, val);
            max_feature = std::max(max_feature, idx);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error("'" + path + "' contains no data rows");

    Dataset ds;
    ds.points = PointMatrix::Zero(static_cast<std::int64_t>(rows.size()), max_feature);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (auto [idx, val] : rows[i]) ds.points(static_cast<std::int64_t>(i), idx - 1) = val;
    ds.labels = remap_labels(raw_labels, ds.num_classes);
    ds.validate();
    return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw parse_error("'" + path + "' is empty");
    auto header = split_csv_row(line);

    std::int64_t label_idx = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == label_column) label_idx = static_cast<std::int64_t>(j);
    if (label_idx < 0) {
        // Accept a 0-based column index in place of a name.
        try {
            std::size_t pos = 0;
            const long v = std::stol(label_column, &pos);
            if (pos == label_column.size() && v >= 0 &&
                v < static_cast<long>(header.size()))
                label_idx = v;
        } catch (...) {
        }
    }
    if (label_idx < 0)
        throw parse_error("label column '" + label_column + "' not found in '" + path + "'");

    const auto width = static_cast<std::int64_t>(header.size());
    std::vector<double> raw_labels;
    std::vector<std::vector<double>> rows;
    std::int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv_row(line);
        if (static_cast<std::int64_t>(cells.size()) != width)
            throw parse_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(width) + " cells, got " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(width - 1));
        for (std::int64_t j = 0; j < width; ++j) {
            const double v = parse_double(cells[static_cast<std::size_t>(j)], line_no, "cell");
            if (j == label_idx)
                raw_labels.push_back(v);
            else
                row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error("'" + path + "' has a header but no data rows");

    Dataset ds;
    ds.points = PointMatrix(static_cast<std::int64_t>(rows.size()), width - 1);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            ds.points(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = rows[i][j];
    ds.labels = remap_labels(raw_labels, ds.num_classes);
    for (std::int64_t j = 0; j < width; ++j)
        if (j != label_idx) ds.feature_names.push_back(header[static_cast<std::size_t>(j)]);
    ds.validate();
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (std::int64_t j = 0; j < ds.dim(); ++j) {
        if (j < static_cast<std::int64_t>(ds.feature_names.size()) &&
            !ds.feature_names[static_cast<std::size_t>(j)].empty())
            out << ds.feature_names[static_cast<std::size_t>(j)];
        else
            out << "f" << (j + 1);
        out << ',';
    }
    out << "label\n";
    char buf[64];
    for (std::int64_t i = 0; i < ds.size(); ++i) {
        for (std::int64_t j = 0; j < ds.dim(); ++j) {
            // %.17g round-trips IEEE doubles exactly through from_chars.
            std::snprintf(buf, sizeof(buf), "%.17g", ds.points(i, j));
            out << buf << ',';
        }
        out << ds.labels[static_cast<std::size_t>(i)] << '\n';
    }
}

std::pair<Dataset, NormalizationParams> normalize_minmax(const Dataset& ds) {
    if (ds.size() < 2) throw std::invalid_argument("normalize_minmax needs at least 2 points");
    NormalizationParams params;
    params.feature_min.resize(static_cast<std::size_t>(ds.dim()));
    params.feature_range.resize(static_cast<std::size_t>(ds.dim()));
    for (std::int64_t j = 0; j < ds.dim(); ++j) {
        const double lo = ds.points.col(j).minCoeff();
        const double hi = ds.points.col(j).maxCoeff();
        params.feature_min[static_cast<std::size_t>(j)] = lo;
        params.feature_range[static_cast<std::size_t>(j)] = hi > lo ? hi - lo : 0.0;
    }
    return {apply_normalization(ds, params), params};
}

Dataset apply_normalization(const Dataset& ds, const NormalizationParams& params) {
    Dataset out = ds;
    if (params.identity()) return out;
    for (std::int64_t i = 0; i < ds.size(); ++i) {
        for (std::int64_t j = 0; j < ds.dim(); ++j) {
            const double range = params.feature_range[static_cast<std::size_t>(j)];
            out.points(i, j) =
                range > 0 ? (ds.points(i, j) - params.feature_min[static_cast<std::size_t>(j)]) / range
                          : 0.0;
        }
    }
    return out;
}

double min_pairwise_distance(const Dataset& ds) {
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < ds.size(); ++i)
        for (std::int64_t j = i + 1; j < ds.size(); ++j)
            best = std::min(best, (ds.points.row(i) - ds.points.row(j)).norm());
    return best;
}

Dataset jitter(const Dataset& ds, double magnitude, std::uint64_t seed) {
    if (magnitude < 0) throw std::invalid_argument("jitter magnitude must be >= 0");
    if (magnitude == 0) return ds;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-magnitude, magnitude);
    constexpr int kMaxRetries = 16;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        Dataset out = ds;
        for (std::int64_t i = 0; i < out.size(); ++i)
            for (std::int64_t j = 0; j < out.dim(); ++j) out.points(i, j) += noise(rng);
        if (min_pairwise_distance(out) > 0) return out;
    }
    throw std::runtime_error("jitter could not separate duplicate points; increase magnitude");
}

Dataset gen_gaussian(std::int64_t n, std::int64_t d, double alpha, std::uint64_t seed) {
    if (n % 2 != 0) throw std::invalid_argument("gen_gaussian needs an even n");
    if (d < 1) throw std::invalid_argument("gen_gaussian needs d >= 1");
    if (alpha <= 0) throw std::invalid_argument("gen_gaussian needs alpha > 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset ds;
    ds.points = PointMatrix(n, d);
    ds.labels.resize(static_cast<std::size_t>(n));
    ds.num_classes = 2;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int32_t label = i < n / 2 ? 0 : 1;
        ds.labels[static_cast<std::size_t>(i)] = label;
        for (std::int64_t j = 0; j < d; ++j) ds.points(i, j) = gauss(rng);
        ds.points(i, 0) += label == 0 ? alpha : -alpha;
    }
    return ds;
}

Split split_dataset(const Dataset& ds, const SplitSpec& spec) {
    std::vector<std::int64_t> test_idx = spec.explicit_test_indices;
    if (test_idx.empty()) {
        if (spec.num_test < 0 || spec.num_test >= ds.size())
            throw std::invalid_argument("num_test must be in [0, n)");
        std::vector<std::int64_t> perm(static_cast<std::size_t>(ds.size()));
        std::iota(perm.begin(), perm.end(), 0);
        std::mt19937_64 rng(spec.seed);
        std::shuffle(perm.begin(), perm.end(), rng);
        test_idx.assign(perm.begin(), perm.begin() + spec.num_test);
    }
    std::vector<bool> is_test(static_cast<std::size_t>(ds.size()), false);
    for (std::int64_t i : test_idx) {
        if (i < 0 || i >= ds.size()) throw std::invalid_argument("test index out of range");
        if (is_test[static_cast<std::size_t>(i)])
            throw std::invalid_argument("duplicate test index");
        is_test[static_cast<std::size_t>(i)] = true;
    }

    Split split;
    split.test_indices = test_idx;
    const auto n_test = static_cast<std::int64_t>(test_idx.size());
    split.train.points = PointMatrix(ds.size() - n_test, ds.dim());
    split.test.points = PointMatrix(n_test, ds.dim());
    split.train.num_classes = split.test.num_classes = ds.num_classes;
    split.train.feature_names = split.test.feature_names = ds.feature_names;

    std::int64_t tr = 0;
    for (std::int64_t i = 0; i < ds.size(); ++i) {
        if (is_test[static_cast<std::size_t>(i)]) continue;
        split.train.points.row(tr++) = ds.points.row(i);
        split.train.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    }
    for (std::int64_t t = 0; t < n_test; ++t) {
        split.test.points.row(t) = ds.points.row(test_idx[static_cast<std::size_t>(t)]);
        split.test.labels.push_back(ds.labels[static_cast<std::size_t>(test_idx[static_cast<std::size_t>(t)])]);
    }
    return split;
}

}  // namespace geoadex
