#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tduebo::data {

/// Tabular dataset: one numeric target column, every other column a
/// numeric feature.
struct Dataset {
    std::string name;
    Eigen::MatrixXd features; // n x d
    Eigen::VectorXd target;   // n
    std::vector<std::string> feature_names;
    std::string target_name;

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index dims() const { return features.cols(); }
};

struct SchemaConfig {
    std::string target_column;
    std::string dataset_name; // defaults to the file stem when empty
};

/// One problem found while scanning a CSV file. `line` is the
/// 1-based file line (the header is line 1).
struct CsvIssue {
    int line = 0;
    std::string message;
};

/// Parses the file, throwing a DataError naming the location of the
/// first problem encountered.
Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& schema);

/// Parses the file collecting every problem instead of stopping at the
/// first; used by the validate command.
std::vector<CsvIssue> scan_csv(const std::filesystem::path& path, const SchemaConfig& schema);

/// Writes the dataset as UTF-8 comma-separated text, header first,
/// floats at 9 significant digits.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Affine maps fitted by normalize(): per-feature min/max for the
/// [0,1] scaling and the target's mean/std for standardization.
struct NormalizationParams {
    std::vector<int> kept_columns;              // indices into the source feature matrix
    std::vector<std::string> dropped_features;  // constant columns removed with a warning
    Eigen::VectorXd feature_min, feature_max;   // per kept column
    double target_mean = 0.0;
    double target_std = 1.0;
    bool identity = false; // 1-D synthetic campaigns skip normalization
};

/// Fits normalization statistics on the given rows only (pass all rows
/// for whole-dataset normalization).
NormalizationParams compute_normalization(const Dataset& dataset,
                                          const std::vector<Eigen::Index>& rows);

/// Applies previously fitted statistics to every row of the dataset.
Dataset apply_normalization(const Dataset& dataset, const NormalizationParams& params);

/// Min-max scales features to [0,1] and standardizes the target to
/// mean 0, std 1 (population convention), fitting on the whole dataset.
std::pair<Dataset, NormalizationParams> normalize(const Dataset& dataset);

double denormalize_target(double value, const NormalizationParams& params);
Eigen::VectorXd denormalize_features(const Eigen::VectorXd& row, const NormalizationParams& params);

/// Campaign sizes. Either the three explicit sizes partition the
/// dataset exactly, or `test_fraction` is set and the test size is
/// derived as round(n * fraction) with the pool absorbing the rest.
struct SplitProtocol {
    Eigen::Index n_initial = 0;
    Eigen::Index pool_size = 0;
    Eigen::Index test_size = 0;
    int budget = 0;
    std::optional<double> test_fraction;
};

struct DataBlock {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Eigen::Index rows() const { return X.rows(); }
};

/// One dataset partitioned for a campaign: initial fit set, sequential
/// candidate pool, held-out test set. Normalization statistics are
/// fitted on initial+pool only and applied to all three parts.
struct CampaignSplit {
    std::string dataset_name;
    DataBlock initial, pool, test;
    std::vector<Eigen::Index> initial_rows, pool_rows, test_rows;
    NormalizationParams normalization;
    std::uint64_t seed = 0;
    int budget = 0;

    std::uint64_t fingerprint() const;
};

/// Seeded uniform three-way split. Repeated calls with the same seed
/// reproduce the assignment exactly.
CampaignSplit make_split(const Dataset& dataset, const SplitProtocol& protocol,
                         std::uint64_t seed);

/// Protocol presets for the three published campaign layouts.
const std::map<std::string, SplitProtocol>& builtin_protocols();

// --- 1-D illustrative experiment -----------------------------------

constexpr double kSynth1dLo = -1.0;
constexpr double kSynth1dHi = 2.0;

/// Noiseless objective of the 1-D experiment:
/// f(x) = -sin(3x) - x^2 + 0.7x; x must lie inside [-1, 2].
double synth_1d_mean(double x);

/// Noisy observation f(x) + Normal(0, noise_std^2) drawn from the
/// given stream. x must lie inside [-1, 2].
double synth_1d(double x, double noise_std, std::mt19937_64& rng);

/// Split for the 1-D experiment: initial points {-0.9, 1.1}, a
/// grid_size-point uniform candidate grid over [-1, 2] (all targets
/// noisy, seeded), and a noiseless dense test grid. No normalization.
CampaignSplit make_1d_split(int grid_size, std::uint64_t seed, double noise_std = 0.2,
                            int budget = 11, int test_grid_size = 300);

// --- synthetic tabular data -----------------------------------------

/// Seeded synthetic dataset drawn from a fixed multimodal response
/// surface with mild observation noise; used for fixtures and
/// protocol-shaped stand-in files.
Dataset make_synthetic_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                               const std::string& name);

/// The bundled 150-row, 4-feature test fixture.
Dataset make_fixture_dataset();

} // namespace tduebo::data
