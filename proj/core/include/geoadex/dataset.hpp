#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoadex/types.hpp"

namespace geoadex {

/// Raised on malformed input files; carries the offending line when known.
class parse_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Per-feature affine map fitted on the generators so that held-out points
/// are transformed with the same parameters.
struct NormalizationParams {
    std::vector<double> feature_min;
    std::vector<double> feature_range;  // 0 for constant features

    Vector apply(const Vector& x) const;
    bool identity() const { return feature_min.empty(); }
};

struct Dataset {
    PointMatrix points;               // n x d
    std::vector<std::int32_t> labels; // values in {0..c-1}
    std::int32_t num_classes = 0;
    std::vector<std::string> feature_names;  // optional, may be empty

    std::int64_t size() const { return points.rows(); }
    std::int64_t dim() const { return points.cols(); }

    Vector point(std::int64_t i) const { return points.row(i).transpose(); }

    /// Content digest over shape, coordinates and labels ("fnv1a64:...").
    std::string fingerprint() const;

    /// Throws std::invalid_argument when labels/coordinates are out of contract.
    void validate() const;
};

struct SplitSpec {
    std::uint64_t seed = 0;
    std::int64_t num_test = 100;
    std::vector<std::int64_t> explicit_test_indices;  // overrides num_test when nonempty
};

struct Split {
    Dataset train;
    Dataset test;
    std::vector<std::int64_t> test_indices;  // into the original dataset
};

Dataset load_libsvm(const std::string& path);
Dataset load_csv(const std::string& path, const std::string& label_column = "label");

/// Writes a CSV with header; numbers printed with enough digits to
/// round-trip bit-exactly through load_csv.
void write_csv(const Dataset& ds, const std::string& path);

/// Maps each feature to [0,1]; constant features map to 0.
std::pair<Dataset, NormalizationParams> normalize_minmax(const Dataset& ds);

/// Applies previously fitted parameters (for held-out points).
Dataset apply_normalization(const Dataset& ds, const NormalizationParams& params);

/// Perturbs every coordinate by uniform noise in [-magnitude, magnitude].
/// Retries with fresh noise (bounded) until all points are pairwise distinct.
Dataset jitter(const Dataset& ds, double magnitude, std::uint64_t seed);

/// Two classes sampled from N(+alpha*e1, I) and N(-alpha*e1, I), n/2 each.
Dataset gen_gaussian(std::int64_t n, std::int64_t d, double alpha, std::uint64_t seed);

/// Uniform random test subset without replacement; remainder are generators.
Split split_dataset(const Dataset& ds, const SplitSpec& spec);

double min_pairwise_distance(const Dataset& ds);

}  // namespace geoadex
