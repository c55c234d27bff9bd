#include "ensel/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "ensel/error.hpp"
#include "ensel/keyvalue.hpp"
#include "ensel/random.hpp"

namespace ensel {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Parse: return "Parse";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::InvalidRawData: return "InvalidRawData";
        case ErrorKind::InsufficientClassMembers: return "InsufficientClassMembers";
        case ErrorKind::DegenerateFold: return "DegenerateFold";
        case ErrorKind::SingleClassTrainingSet: return "SingleClassTrainingSet";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::SingleClassSample: return "SingleClassSample";
        case ErrorKind::EmptyEnsemble: return "EmptyEnsemble";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::NoSignificantEnsemble: return "NoSignificantEnsemble";
        case ErrorKind::InvalidRepeats: return "InvalidRepeats";
        case ErrorKind::DegenerateData: return "DegenerateData";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::InvalidParams: return "InvalidParams";
    }
    return "Unknown";
}

std::string_view to_string(Label label) { return label == Label::Weak ? "W" : "G"; }

std::string_view to_string(Stage stage) { return stage == Stage::Stage20 ? "20" : "50"; }

Stage parse_stage(std::string_view text) {
    const std::string t = trim(text);
    if (t == "20" || t == "stage20" || t == "Stage20") return Stage::Stage20;
    if (t == "50" || t == "stage50" || t == "Stage50") return Stage::Stage50;
    throw Error(ErrorKind::InvalidArgument, "unknown stage '" + t + "' (expected 20 or 50)");
}

Label label_for_grade(double final_grade) { return final_grade < 60.0 ? Label::Weak : Label::Good; }

long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5 + 1e-9)); }

int percent_mark(double mark, double feature_max) {
    const long long pct = round_half_up(mark / feature_max * 100.0);
    return static_cast<int>(std::clamp<long long>(pct, 0, 100));
}

void RawDataset::validate() const {
    const std::size_t n = student_ids.size();
    if (raw_marks.size() != n || final_grade.size() != n) {
        throw Error(ErrorKind::InvalidRawData, "row count mismatch between ids, marks and final grades");
    }
    if (feature_max.size() != feature_names.size()) {
        throw Error(ErrorKind::InvalidRawData, "feature_max has wrong width");
    }
    for (std::size_t j = 0; j < feature_max.size(); ++j) {
        if (!(feature_max[j] > 0.0) || !std::isfinite(feature_max[j])) {
            throw Error(ErrorKind::InvalidRawData, "feature_max for '" + feature_names[j] + "' must be positive");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (raw_marks[i].size() != feature_names.size()) {
            throw Error(ErrorKind::InvalidRawData, "row '" + student_ids[i] + "' has wrong width");
        }
        for (const auto& m : raw_marks[i]) {
            if (m && (!std::isfinite(*m) || *m < 0.0)) {
                throw Error(ErrorKind::InvalidRawData, "negative or non-finite mark for '" + student_ids[i] + "'");
            }
        }
        if (!(final_grade[i] >= 0.0 && final_grade[i] <= 100.0)) {
            throw Error(ErrorKind::InvalidRawData, "final grade of '" + student_ids[i] + "' outside [0,100]");
        }
    }
}

std::size_t Dataset::count(Label label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

// ---------------------------------------------------------------------------
// Schema

double Schema::max_for(const std::string& feature) const {
    const auto it = feature_max.find(feature);
    return it == feature_max.end() ? 100.0 : it->second;
}

Schema Schema::parse(std::string_view text) {
    const auto kv = KeyValueFile::parse(text);
    Schema schema;
    for (const auto& [key, value] : kv.entries()) {
        if (key == "id_column") {
            schema.id_column = value;
        } else if (key == "grade_column") {
            schema.grade_column = value;
        } else if (key == "features") {
            schema.features = split_list(value);
        } else if (key == "stage20") {
            schema.stage_features[Stage::Stage20] = split_list(value);
        } else if (key == "stage50") {
            schema.stage_features[Stage::Stage50] = split_list(value);
        } else if (key.rfind("max.", 0) == 0) {
            const double m = parse_double(value, key);
            if (!(m > 0.0)) throw Error(ErrorKind::Parse, key + " must be positive");
            schema.feature_max[key.substr(4)] = m;
        } else {
            throw Error(ErrorKind::Parse, "unknown schema key '" + key + "'");
        }
    }
    return schema;
}

Schema Schema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open schema " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
}

std::vector<std::string> dataset1_features(Stage stage) {
    std::vector<std::string> f = {"ES1.1", "ES1.2", "ES2.1", "ES2.2", "ES3.1", "ES3.2", "ES3.3", "ES3.4", "ES3.5"};
    if (stage == Stage::Stage50) f.insert(f.end(), {"ES4.1", "ES4.2", "ES5.1"});
    return f;
}

std::vector<std::string> dataset2_features(Stage stage) {
    if (stage == Stage::Stage20) return {"Quiz01", "Assign01"};
    return {"Quiz01", "Assign01", "Midterm", "Assign02"};
}

Schema dataset1_schema() {
    Schema s;
    s.features = {"ES1.1", "ES1.2", "ES2.1", "ES2.2", "ES3.1", "ES3.2", "ES3.3", "ES3.4",
                  "ES3.5", "ES4.1", "ES4.2", "ES5.1", "ES5.2", "ES5.3", "ES6.1", "ES6.2"};
    const double maxes[] = {2, 3, 2, 3, 1, 2, 2, 2, 3, 15, 10, 2, 10, 3, 25, 15};
    for (std::size_t j = 0; j < s.features.size(); ++j) s.feature_max[s.features[j]] = maxes[j];
    s.stage_features[Stage::Stage20] = dataset1_features(Stage::Stage20);
    s.stage_features[Stage::Stage50] = dataset1_features(Stage::Stage50);
    return s;
}

Schema dataset2_schema() {
    Schema s;
    s.features = {"Quiz01", "Assign01", "Midterm", "Assign02", "Assign03", "FinalExam"};
    const double maxes[] = {10, 8, 20, 12, 25, 35};
    for (std::size_t j = 0; j < s.features.size(); ++j) s.feature_max[s.features[j]] = maxes[j];
    s.stage_features[Stage::Stage20] = dataset2_features(Stage::Stage20);
    s.stage_features[Stage::Stage50] = dataset2_features(Stage::Stage50);
    return s;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(cell));
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    if (quoted) throw Error(ErrorKind::Parse, fmt::format("line {}: unterminated quote", line_no));
    cells.push_back(trim(cell));
    return cells;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::MissingColumn, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

RawDataset read_csv(std::istream& in, const Schema& schema) {
    std::string line;
    int line_no = 1;
    if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "empty file: header row missing");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto header = split_csv_line(line, line_no);

    const std::size_t id_col = column_index(header, schema.id_column);
    const std::size_t grade_col = column_index(header, schema.grade_column);

    RawDataset raw;
    std::vector<std::size_t> feature_cols;
    if (schema.features.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == id_col || c == grade_col) continue;
            raw.feature_names.push_back(header[c]);
            feature_cols.push_back(c);
        }
    } else {
        for (const auto& name : schema.features) {
            feature_cols.push_back(column_index(header, name));
            raw.feature_names.push_back(name);
        }
    }
    for (const auto& name : raw.feature_names) raw.feature_max.push_back(schema.max_for(name));

    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line, line_no);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::Parse, fmt::format("line {}: expected {} cells, found {}", line_no,
                                                      header.size(), cells.size()));
        }
        const std::string& id = cells[id_col];
        if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateId, "student id '" + id + "' repeated");

        std::vector<std::optional<double>> marks;
        marks.reserve(feature_cols.size());
        for (std::size_t c : feature_cols) {
            if (cells[c].empty()) {
                marks.emplace_back(std::nullopt);
            } else {
                marks.emplace_back(parse_double(cells[c], fmt::format("line {}, column {}", line_no, header[c])));
            }
        }
        if (cells[grade_col].empty()) {
            throw Error(ErrorKind::InvalidRawData, fmt::format("line {}: final grade missing", line_no));
        }
        raw.student_ids.push_back(id);
        raw.raw_marks.push_back(std::move(marks));
        raw.final_grade.push_back(parse_double(cells[grade_col], fmt::format("line {}, final grade", line_no)));
    }
    raw.validate();
    return raw;
}

RawDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return read_csv(in, schema);
}

void write_csv(std::ostream& out, const RawDataset& raw, const Schema& schema) {
    out << csv_escape(schema.id_column);
    for (const auto& f : raw.feature_names) out << ',' << csv_escape(f);
    out << ',' << csv_escape(schema.grade_column) << '\n';
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out << csv_escape(raw.student_ids[i]);
        for (const auto& m : raw.raw_marks[i]) {
            out << ',';
            if (m) out << fmt::format("{}", *m);
        }
        out << ',' << fmt::format("{}", raw.final_grade[i]) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Preprocessing

Dataset preprocess(const RawDataset& raw, Stage stage, std::span<const std::string> features) {
    raw.validate();
    std::vector<std::size_t> cols;
    if (features.empty()) {
        cols.resize(raw.feature_names.size());
        std::iota(cols.begin(), cols.end(), std::size_t{0});
    } else {
        for (const auto& name : features) cols.push_back(column_index(raw.feature_names, name));
    }

    Dataset ds;
    ds.stage = stage;
    ds.student_ids = raw.student_ids;
    for (std::size_t c : cols) ds.feature_names.push_back(raw.feature_names[c]);
    ds.marks.reserve(raw.size());
    ds.labels.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::vector<int> row;
        row.reserve(cols.size());
        for (std::size_t c : cols) {
            const double mark = raw.raw_marks[i][c].value_or(0.0);
            row.push_back(percent_mark(mark, raw.feature_max[c]));
        }
        ds.marks.push_back(std::move(row));
        ds.labels.push_back(label_for_grade(raw.final_grade[i]));
    }
    return ds;
}

Dataset preprocess(const RawDataset& raw, Stage stage, const Schema& schema) {
    const auto it = schema.stage_features.find(stage);
    if (it != schema.stage_features.end()) return preprocess(raw, stage, it->second);
    return preprocess(raw, stage, schema.features);
}

RawDataset as_raw(const Dataset& ds, std::span<const double> final_grade) {
    if (!final_grade.empty() && final_grade.size() != ds.size()) {
        throw Error(ErrorKind::LengthMismatch, "final_grade length differs from dataset size");
    }
    RawDataset raw;
    raw.student_ids = ds.student_ids;
    raw.feature_names = ds.feature_names;
    raw.feature_max.assign(ds.n_features(), 100.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<std::optional<double>> row;
        for (int m : ds.marks[i]) row.emplace_back(static_cast<double>(m));
        raw.raw_marks.push_back(std::move(row));
        if (final_grade.empty()) {
            raw.final_grade.push_back(ds.labels[i] == Label::Weak ? 0.0 : 100.0);
        } else {
            raw.final_grade.push_back(final_grade[i]);
        }
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Splitting

TrainIndices FoldPlan::complement(std::size_t f) const {
    TrainIndices out;
    for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g == f) continue;
        out.values.insert(out.values.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(out.values.begin(), out.values.end());
    return out;
}

std::size_t train_allocation(std::size_t label_count, double frac) {
    if (label_count < 2) {
        throw Error(ErrorKind::InsufficientClassMembers, "each label needs at least 2 students to split");
    }
    const auto n = round_half_up(frac * static_cast<double>(label_count));
    return static_cast<std::size_t>(std::clamp<long long>(n, 1, static_cast<long long>(label_count) - 1));
}

Split stratified_split(const Dataset& ds, double frac, std::uint64_t seed) {
    if (!(frac > 0.0 && frac < 1.0)) throw Error(ErrorKind::InvalidArgument, "train fraction must lie in (0,1)");
    Rng rng(seed);
    Split split;
    split.seed = seed;
    for (Label label : {Label::Weak, Label::Good}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.labels[i] == label) members.push_back(i);
        }
        const std::size_t n_train = train_allocation(members.size(), frac);
        std::shuffle(members.begin(), members.end(), rng);
        split.train.values.insert(split.train.values.end(), members.begin(), members.begin() + n_train);
        split.test.values.insert(split.test.values.end(), members.begin() + n_train, members.end());
    }
    std::sort(split.train.values.begin(), split.train.values.end());
    std::sort(split.test.values.begin(), split.test.values.end());
    return split;
}

SplitPlan make_split_plan(const Dataset& ds, std::uint64_t seed, double frac, std::size_t extra_splits) {
    SplitPlan plan;
    plan.train_fraction = frac;
    plan.master_seed = seed;
    for (std::size_t i = 0; i <= extra_splits; ++i) {
        plan.splits.push_back(stratified_split(ds, frac, derive_seed(seed, i)));
    }
    return plan;
}

FoldPlan kfold(const TrainIndices& train, std::size_t k, std::uint64_t seed, std::span<const Label> labels) {
    if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be at least 2");
    if (train.size() < k) throw Error(ErrorKind::InvalidArgument, "fewer training rows than folds");

    Rng rng(seed);
    FoldPlan plan;
    plan.k = k;
    plan.folds.resize(k);
    std::size_t dealt = 0;
    for (Label label : {Label::Weak, Label::Good}) {
        std::vector<std::size_t> members;
        for (std::size_t idx : train) {
            if (labels[idx] == label) members.push_back(idx);
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t idx : members) plan.folds[dealt++ % k].push_back(idx);
    }
    for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());

    for (std::size_t f = 0; f < k; ++f) {
        bool has_weak = false;
        bool has_good = false;
        for (std::size_t idx : plan.complement(f)) {
            (labels[idx] == Label::Weak ? has_weak : has_good) = true;
        }
        if (!has_weak || !has_good) {
            throw Error(ErrorKind::DegenerateFold, fmt::format("fold {} leaves a single-label training set", f));
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------

FeatureMatrix feature_matrix(const Dataset& ds, std::span<const std::size_t> rows) {
    FeatureMatrix x(rows.size(), ds.n_features());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& marks = ds.marks.at(rows[r]);
        for (std::size_t c = 0; c < marks.size(); ++c) x(r, c) = marks[c];
    }
    return x;
}

std::vector<Label> labels_at(const Dataset& ds, std::span<const std::size_t> rows) {
    std::vector<Label> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(ds.labels.at(r));
    return out;
}

std::vector<std::size_t> all_indices(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace ensel
