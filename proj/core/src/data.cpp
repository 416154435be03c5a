#include "tduebo/data.hpp"

#include "tduebo/errors.hpp"
#include "tduebo/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace tduebo::data {

namespace {

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r");
    return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

bool parse_double(const std::string& field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
}

/// Shared CSV reader: collects issues and, when the file is clean,
/// fills `out`. The header is file line 1.
std::vector<CsvIssue> read_csv(const std::filesystem::path& path, const SchemaConfig& schema,
                               Dataset* out) {
    std::vector<CsvIssue> issues;
    std::ifstream stream(path);
    if (!stream) {
        issues.push_back({0, "cannot open file '" + path.string() + "'"});
        return issues;
    }

    std::string line;
    if (!std::getline(stream, line)) {
        issues.push_back({0, "file is empty"});
        return issues;
    }
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) {
        line.erase(0, 3); // UTF-8 byte-order mark
    }

    const auto header = split_fields(line);
    int target_index = -1;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i].empty()) {
            issues.push_back({1, "empty column name in header"});
        }
        if (!seen.insert(header[i]).second) {
            issues.push_back({1, "duplicate column '" + header[i] + "'"});
        }
        if (header[i] == schema.target_column && target_index < 0) {
            target_index = static_cast<int>(i);
        }
    }
    if (target_index < 0) {
        issues.push_back({1, "target column '" + schema.target_column + "' not found in header"});
        return issues;
    }
    if (header.size() < 2) {
        issues.push_back({1, "no feature columns besides target '" + schema.target_column + "'"});
        return issues;
    }

    const auto n_cols = header.size();
    std::vector<std::vector<double>> feature_rows;
    std::vector<double> target_values;
    int line_no = 1;
    while (std::getline(stream, line)) {
        ++line_no;
        if (trim(line).empty()) {
            // A blank final line is a conventional trailing newline;
            // blank lines elsewhere are malformed rows.
            if (stream.peek() != std::ifstream::traits_type::eof()) {
                issues.push_back({line_no, "blank line"});
            }
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != n_cols) {
            issues.push_back({line_no, "expected " + std::to_string(n_cols) + " fields, found " +
                                           std::to_string(fields.size())});
            continue;
        }
        std::vector<double> row;
        row.reserve(n_cols - 1);
        double target = 0.0;
        bool row_ok = true;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            double value = 0.0;
            if (!parse_double(fields[i], value)) {
                issues.push_back({line_no, "non-numeric value '" + fields[i] + "' in column '" +
                                               header[i] + "'"});
                row_ok = false;
                continue;
            }
            if (!std::isfinite(value)) {
                issues.push_back({line_no, "non-finite value in column '" + header[i] + "'"});
                row_ok = false;
                continue;
            }
            if (static_cast<int>(i) == target_index) {
                target = value;
            } else {
                row.push_back(value);
            }
        }
        if (row_ok) {
            feature_rows.push_back(std::move(row));
            target_values.push_back(target);
        }
    }

    if (feature_rows.empty() && issues.empty()) {
        issues.push_back({line_no, "no data rows"});
    } else if (feature_rows.size() < 3 && issues.empty()) {
        issues.push_back({line_no, "needs at least 3 data rows, found " +
                                       std::to_string(feature_rows.size())});
    }
    if (!issues.empty() || out == nullptr) {
        return issues;
    }

    const auto n = static_cast<Eigen::Index>(feature_rows.size());
    const auto d = static_cast<Eigen::Index>(n_cols - 1);
    out->features.resize(n, d);
    out->target.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
            out->features(r, c) = feature_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
        out->target(r) = target_values[static_cast<std::size_t>(r)];
    }
    out->feature_names.clear();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (static_cast<int>(i) != target_index) {
            out->feature_names.push_back(header[i]);
        }
    }
    out->target_name = schema.target_column;
    out->name = schema.dataset_name.empty() ? path.stem().string() : schema.dataset_name;
    return issues;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& schema) {
    if (schema.target_column.empty()) {
        throw ConfigError("target column name must not be empty");
    }
    Dataset dataset;
    const auto issues = read_csv(path, schema, &dataset);
    if (!issues.empty()) {
        const auto& first = issues.front();
        std::ostringstream msg;
        msg << path.string();
        if (first.line > 0) {
            msg << ":" << first.line;
        }
        msg << ": " << first.message;
        throw DataError(msg.str());
    }
    return dataset;
}

std::vector<CsvIssue> scan_csv(const std::filesystem::path& path, const SchemaConfig& schema) {
    if (schema.target_column.empty()) {
        throw ConfigError("target column name must not be empty");
    }
    return read_csv(path, schema, nullptr);
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream stream(path);
    if (!stream) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    for (const auto& name : dataset.feature_names) {
        stream << name << ',';
    }
    stream << dataset.target_name << '\n';
    for (Eigen::Index r = 0; r < dataset.rows(); ++r) {
        for (Eigen::Index c = 0; c < dataset.dims(); ++c) {
            stream << format_g9(dataset.features(r, c)) << ',';
        }
        stream << format_g9(dataset.target(r)) << '\n';
    }
    if (!stream) {
        throw DataError("failed while writing '" + path.string() + "'");
    }
}

NormalizationParams compute_normalization(const Dataset& dataset,
                                          const std::vector<Eigen::Index>& rows) {
    if (rows.empty()) {
        throw InputError("normalization requires at least one row");
    }
    for (const auto r : rows) {
        if (r < 0 || r >= dataset.rows()) {
            throw InputError("normalization row index out of range");
        }
    }

    NormalizationParams params;
    std::vector<double> mins, maxs;
    for (Eigen::Index c = 0; c < dataset.dims(); ++c) {
        double lo = dataset.features(rows.front(), c);
        double hi = lo;
        for (const auto r : rows) {
            lo = std::min(lo, dataset.features(r, c));
            hi = std::max(hi, dataset.features(r, c));
        }
        if (hi > lo) {
            params.kept_columns.push_back(static_cast<int>(c));
            mins.push_back(lo);
            maxs.push_back(hi);
        } else {
            params.dropped_features.push_back(dataset.feature_names.empty()
                                                  ? "column " + std::to_string(c)
                                                  : dataset.feature_names[static_cast<std::size_t>(c)]);
        }
    }
    if (params.kept_columns.empty()) {
        throw DataError("dataset '" + dataset.name + "': every feature column is constant");
    }
    params.feature_min = Eigen::Map<const Eigen::VectorXd>(mins.data(), static_cast<Eigen::Index>(mins.size()));
    params.feature_max = Eigen::Map<const Eigen::VectorXd>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));

    double mean = 0.0;
    for (const auto r : rows) {
        mean += dataset.target(r);
    }
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (const auto r : rows) {
        const double diff = dataset.target(r) - mean;
        var += diff * diff;
    }
    var /= static_cast<double>(rows.size()); // population convention
    if (!(var > 0.0)) {
        throw DataError("dataset '" + dataset.name + "': target has zero variance, nothing to optimize");
    }
    params.target_mean = mean;
    params.target_std = std::sqrt(var);
    return params;
}

Dataset apply_normalization(const Dataset& dataset, const NormalizationParams& params) {
    if (params.identity) {
        return dataset;
    }
    const auto kept = static_cast<Eigen::Index>(params.kept_columns.size());
    Dataset result;
    result.name = dataset.name;
    result.target_name = dataset.target_name;
    result.features.resize(dataset.rows(), kept);
    result.target.resize(dataset.rows());
    for (Eigen::Index j = 0; j < kept; ++j) {
        const auto src = params.kept_columns[static_cast<std::size_t>(j)];
        const double span = params.feature_max(j) - params.feature_min(j);
        result.features.col(j) = (dataset.features.col(src).array() - params.feature_min(j)) / span;
        if (!dataset.feature_names.empty()) {
            result.feature_names.push_back(dataset.feature_names[static_cast<std::size_t>(src)]);
        }
    }
    result.target = (dataset.target.array() - params.target_mean) / params.target_std;
    return result;
}

std::pair<Dataset, NormalizationParams> normalize(const Dataset& dataset) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(dataset.rows()));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    auto params = compute_normalization(dataset, rows);
    return {apply_normalization(dataset, params), std::move(params)};
}

double denormalize_target(double value, const NormalizationParams& params) {
    if (params.identity) {
        return value;
    }
    return value * params.target_std + params.target_mean;
}

Eigen::VectorXd denormalize_features(const Eigen::VectorXd& row, const NormalizationParams& params) {
    if (params.identity) {
        return row;
    }
    if (row.size() != params.feature_min.size()) {
        throw InputError("feature row width does not match normalization statistics");
    }
    return params.feature_min.array() +
           row.array() * (params.feature_max - params.feature_min).array();
}

std::uint64_t CampaignSplit::fingerprint() const {
    Fnv1a64 hash;
    hash.update(dataset_name);
    hash.update(seed);
    hash.update(static_cast<std::uint64_t>(budget));
    for (const auto* rows : {&initial_rows, &pool_rows, &test_rows}) {
        hash.update(static_cast<std::uint64_t>(rows->size()));
        for (const auto r : *rows) {
            hash.update(static_cast<std::uint64_t>(r));
        }
    }
    for (const auto* block : {&initial, &pool, &test}) {
        hash.update(block->X);
        hash.update(block->y);
    }
    return hash.digest();
}

namespace {

DataBlock take_rows(const Dataset& dataset, const std::vector<Eigen::Index>& rows) {
    DataBlock block;
    block.X.resize(static_cast<Eigen::Index>(rows.size()), dataset.dims());
    block.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        block.X.row(static_cast<Eigen::Index>(i)) = dataset.features.row(rows[i]);
        block.y(static_cast<Eigen::Index>(i)) = dataset.target(rows[i]);
    }
    return block;
}

} // namespace

CampaignSplit make_split(const Dataset& dataset, const SplitProtocol& protocol,
                         std::uint64_t seed) {
    const auto n = dataset.rows();
    SplitProtocol sizes = protocol;
    if (sizes.test_fraction.has_value()) {
        const double fraction = *sizes.test_fraction;
        if (!(fraction > 0.0 && fraction < 1.0)) {
            throw ConfigError("test fraction must lie in (0, 1)");
        }
        sizes.test_size = static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * fraction));
        sizes.pool_size = n - sizes.n_initial - sizes.test_size;
    }
    if (sizes.n_initial < 1 || sizes.pool_size < 1 || sizes.test_size < 1) {
        throw ConfigError("split sizes must each be at least 1 (initial=" +
                          std::to_string(sizes.n_initial) + ", pool=" + std::to_string(sizes.pool_size) +
                          ", test=" + std::to_string(sizes.test_size) + ")");
    }
    if (sizes.n_initial + sizes.pool_size + sizes.test_size != n) {
        throw DataError("dataset '" + dataset.name + "' has " + std::to_string(n) +
                        " rows but the protocol partitions " +
                        std::to_string(sizes.n_initial + sizes.pool_size + sizes.test_size) +
                        " (initial=" + std::to_string(sizes.n_initial) +
                        ", pool=" + std::to_string(sizes.pool_size) +
                        ", test=" + std::to_string(sizes.test_size) +
                        "); set a test fraction to derive sizes from the row count");
    }
    if (sizes.budget < 1 || sizes.budget > sizes.pool_size) {
        throw ConfigError("budget must lie in [1, pool size], got " + std::to_string(sizes.budget));
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    CampaignSplit split;
    split.dataset_name = dataset.name;
    split.seed = seed;
    split.budget = sizes.budget;
    auto cursor = order.begin();
    split.initial_rows.assign(cursor, cursor + sizes.n_initial);
    cursor += sizes.n_initial;
    split.pool_rows.assign(cursor, cursor + sizes.pool_size);
    cursor += sizes.pool_size;
    split.test_rows.assign(cursor, order.end());

    // Normalization statistics come from the rows a campaign may ever
    // observe (initial + pool); the held-out test rows never leak in.
    std::vector<Eigen::Index> observable = split.initial_rows;
    observable.insert(observable.end(), split.pool_rows.begin(), split.pool_rows.end());
    split.normalization = compute_normalization(dataset, observable);

    const auto scaled = apply_normalization(dataset, split.normalization);
    split.initial = take_rows(scaled, split.initial_rows);
    split.pool = take_rows(scaled, split.pool_rows);
    split.test = take_rows(scaled, split.test_rows);
    return split;
}

const std::map<std::string, SplitProtocol>& builtin_protocols() {
    static const std::map<std::string, SplitProtocol> protocols = {
        {"p3ht_cnt", {30, 144, 59, 50, std::nullopt}},
        {"perovskite", {20, 84, 39, 40, std::nullopt}},
        {"autoam", {15, 60, 25, 30, std::nullopt}},
    };
    return protocols;
}

double synth_1d_mean(double x) {
    if (!(x >= kSynth1dLo && x <= kSynth1dHi)) {
        throw InputError("1-D objective evaluated outside [-1, 2]");
    }
    return -std::sin(3.0 * x) - x * x + 0.7 * x;
}

double synth_1d(double x, double noise_std, std::mt19937_64& rng) {
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw InputError("noise std must be finite and non-negative");
    }
    std::normal_distribution<double> noise(0.0, 1.0);
    return synth_1d_mean(x) + noise_std * noise(rng);
}

CampaignSplit make_1d_split(int grid_size, std::uint64_t seed, double noise_std, int budget,
                            int test_grid_size) {
    if (grid_size < 13) {
        throw ConfigError("1-D candidate grid needs at least 13 points");
    }
    if (test_grid_size < 2) {
        throw ConfigError("1-D test grid needs at least two points");
    }
    if (budget < 1 || budget > grid_size) {
        throw ConfigError("budget must lie in [1, grid size], got " + std::to_string(budget));
    }

    std::mt19937_64 rng(seed);
    CampaignSplit split;
    split.dataset_name = "synth1d";
    split.seed = seed;
    split.budget = budget;
    split.normalization.identity = true;
    split.normalization.kept_columns = {0};
    split.normalization.feature_min = Eigen::VectorXd::Constant(1, kSynth1dLo);
    split.normalization.feature_max = Eigen::VectorXd::Constant(1, kSynth1dHi);

    const Eigen::Vector2d starts(-0.9, 1.1);
    split.initial.X = starts;
    split.initial.y.resize(2);
    for (Eigen::Index i = 0; i < 2; ++i) {
        split.initial.y(i) = synth_1d(starts(i), noise_std, rng);
    }
    split.initial_rows = {0, 1};

    const double span = kSynth1dHi - kSynth1dLo;
    split.pool.X.resize(grid_size, 1);
    split.pool.y.resize(grid_size);
    split.pool_rows.resize(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i) {
        const double x = kSynth1dLo + span * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        split.pool.X(i, 0) = x;
        split.pool.y(i) = synth_1d(x, noise_std, rng);
        split.pool_rows[static_cast<std::size_t>(i)] = i;
    }

    split.test.X.resize(test_grid_size, 1);
    split.test.y.resize(test_grid_size);
    split.test_rows.resize(static_cast<std::size_t>(test_grid_size));
    for (int i = 0; i < test_grid_size; ++i) {
        const double x =
            kSynth1dLo + span * static_cast<double>(i) / static_cast<double>(test_grid_size - 1);
        split.test.X(i, 0) = x;
        split.test.y(i) = synth_1d_mean(x); // noiseless reference
        split.test_rows[static_cast<std::size_t>(i)] = i;
    }
    return split;
}

Dataset make_synthetic_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                               const std::string& name) {
    if (n < 1 || d < 1) {
        throw InputError("synthetic dataset needs positive dimensions");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Dataset dataset;
    dataset.name = name;
    dataset.target_name = "y";
    dataset.features.resize(n, d);
    dataset.target.resize(n);
    for (Eigen::Index c = 0; c < d; ++c) {
        dataset.feature_names.push_back("x" + std::to_string(c + 1));
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        double response = 0.0;
        for (Eigen::Index c = 0; c < d; ++c) {
            const double z = unit(rng);
            // Distinct per-column ranges so min-max scaling is exercised.
            dataset.features(r, c) = (static_cast<double>(c) + 1.0) * (3.0 * z - 1.0);
            response += std::sin(3.0 * z + static_cast<double>(c)) / (static_cast<double>(c) + 1.0);
            response -= 0.5 * (z - 0.4) * (z - 0.4);
        }
        dataset.target(r) = response + 0.05 * noise(rng);
    }
    return dataset;
}

Dataset make_fixture_dataset() {
    return make_synthetic_dataset(150, 4, 0x66697874u, "fixture");
}

} // namespace tduebo::data
