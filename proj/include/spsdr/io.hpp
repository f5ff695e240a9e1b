#pragma once

#include "spsdr/models.hpp"
#include "spsdr/predictor.hpp"
#include "spsdr/simulate.hpp"
#include "spsdr/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spsdr::io {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFileVersion = 1;

/// Rows of a dataset CSV: s1, s2, [y], x1 ... xp.
struct Dataset {
    Matrix coords;
    Matrix x;
    std::optional<Vector> y;

    [[nodiscard]] Index size() const { return x.rows(); }
    /// Throws InvalidArgument when the file had no y column.
    [[nodiscard]] SpatialSample sample() const;
};

/// %.17g, with inf/nan spelled out.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

Dataset parse_dataset_csv(const std::string& text, bool require_y = false);
Dataset read_dataset_csv(const std::filesystem::path& path, bool require_y = false);

std::string dataset_csv(const SpatialSample& sample);
std::string dataset_csv(const Matrix& coords, const Matrix& x);

std::string predictions_csv(const Matrix& coords, const std::vector<Prediction>& predictions);

/// Predictions CSV (s1, s2, y_hat, fallback_flag) or any CSV with a y / y_hat column.
struct ScoredColumn {
    Matrix coords;
    Vector values;
};
ScoredColumn read_value_column(const std::filesystem::path& path, const std::vector<std::string>& names);

// Model files ---------------------------------------------------------------

struct ModelFile {
    int version = kModelFileVersion;
    std::optional<ReductionFit> fit;  ///< absent for the raw-predictor (FULL) model
    TrainingReference reference;
    std::optional<double> h1;
    std::optional<double> h2;
    std::uint64_t seed = 0;
    std::string library_version = SPSDR_VERSION;

    [[nodiscard]] std::string kind_name() const;
};

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const ModelFile& model);
ModelFile model_from_json(const Json& j);

std::string dump(const Json& j);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

Json to_json(const MetricsReport& report);

}  // namespace spsdr::io
