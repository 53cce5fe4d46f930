#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "isinglab/eval.hpp"
#include "isinglab/types.hpp"

namespace isinglab {

// ---------------------------------------------------------------- text helpers

/// Shortest decimal form that reads back to the same double; "NA" for NaN.
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "NA";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

/// Comma-separated list, ignoring commas inside parentheses ("T1, BLOCK(T3,5)").
inline std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : text) {
        if (c == '(')
            ++depth;
        if (c == ')')
            --depth;
        if (c == ',' && depth == 0) {
            if (!trim(cur).empty())
                out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty())
        out.push_back(trim(cur));
    return out;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    return out;
}

// ---------------------------------------------------------------- datasets

/// Rows whose filter columns equal the given values; variables with fewer
/// than `min_positives` ones among those rows are dropped.
struct StratumSpec
{
    std::vector<std::pair<std::string, std::string>> filters;
    std::size_t min_positives = 5;
};

struct IngestOptions
{
    /// Non-binary columns (stratification labels); filter columns are added
    /// automatically. They are removed from the dataset.
    std::vector<std::string> label_columns;
    std::optional<StratumSpec> stratum;
    bool drop_constant = false;
};

struct IngestResult
{
    BinaryDataset data;
    std::size_t rows_total = 0;                 // body rows in the file
    std::vector<std::string> constant_columns;  // zero variance (dropped if requested)
    std::vector<std::string> dropped_rare;      // below the stratum positives threshold
};

/// Reads a CSV with a header of unique names and 0/1 body cells.
inline IngestResult ingest_csv(std::istream& in, const IngestOptions& opt = {})
{
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty())
        throw ParseError(1, 1, "missing header row");
    if (lineno == 1 && header[0].rfind("\xEF\xBB\xBF", 0) == 0)
        header[0] = header[0].substr(3);
    std::map<std::string, std::size_t> pos;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j].empty())
            throw ParseError(lineno, j + 1, "empty column name");
        if (!pos.emplace(header[j], j).second)
            throw DuplicateName("duplicate column name '" + header[j] + "'");
    }

    std::set<std::string> labels(opt.label_columns.begin(), opt.label_columns.end());
    if (opt.stratum)
        for (const auto& f : opt.stratum->filters)
            labels.insert(f.first);
    for (const auto& l : labels)
        if (!pos.count(l))
            throw InvalidArgument("unknown column '" + l + "'");
    std::vector<std::size_t> var_cols;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (!labels.count(header[j]))
            var_cols.push_back(j);
    if (var_cols.empty())
        throw InvalidArgument("no binary variables in '" + header[0] + "...'");

    IngestResult res;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError(lineno, std::min(cells.size(), header.size()) + 1,
                             "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(cells.size()));
        ++res.rows_total;
        bool keep = true;
        if (opt.stratum)
            for (const auto& [col, value] : opt.stratum->filters)
                keep = keep && cells[pos.at(col)] == value;
        std::vector<double> r;
        r.reserve(var_cols.size());
        for (std::size_t j : var_cols) {
            if (cells[j] == "0")
                r.push_back(0.0);
            else if (cells[j] == "1")
                r.push_back(1.0);
            else
                throw NonBinaryValue(lineno, j + 1, cells[j]);
        }
        if (keep)
            rows.push_back(std::move(r));
    }
    if (rows.empty())
        throw InvalidArgument("no data rows" + std::string(opt.stratum ? " match the stratum" : ""));

    const auto n = static_cast<Index>(rows.size());
    Matrix x(n, static_cast<Index>(var_cols.size()));
    for (Index i = 0; i < n; ++i)
        for (std::size_t j = 0; j < var_cols.size(); ++j)
            x(i, static_cast<Index>(j)) = rows[static_cast<std::size_t>(i)][j];

    std::vector<Index> kept;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < var_cols.size(); ++j) {
        const std::string& name = header[var_cols[j]];
        const double ones = x.col(static_cast<Index>(j)).sum();
        if (opt.stratum && ones < static_cast<double>(opt.stratum->min_positives)) {
            res.dropped_rare.push_back(name);
            continue;
        }
        const bool constant = ones == 0.0 || ones == static_cast<double>(n);
        if (constant) {
            res.constant_columns.push_back(name);
            if (opt.drop_constant)
                continue;
        }
        kept.push_back(static_cast<Index>(j));
        names.push_back(name);
    }
    if (kept.empty())
        throw InvalidArgument("every variable was dropped");
    Matrix sub(n, static_cast<Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j)
        sub.col(static_cast<Index>(j)) = x.col(kept[j]);
    res.data = BinaryDataset(std::move(sub), std::move(names));
    return res;
}

inline IngestResult ingest_csv(const std::string& path, const IngestOptions& opt = {})
{
    auto in = open_input(path);
    return ingest_csv(in, opt);
}

/// Header of unique names, then rows of 0/1 tokens.
inline BinaryDataset load_binary_csv(const std::string& path)
{
    return ingest_csv(path).data;
}

inline void write_binary_csv(std::ostream& out, const BinaryDataset& data)
{
    for (std::size_t k = 0; k < data.names().size(); ++k)
        out << (k ? "," : "") << data.names()[k];
    out << '\n';
    std::string row;
    for (Index i = 0; i < data.n(); ++i) {
        row.clear();
        for (Index k = 0; k < data.p(); ++k) {
            if (k)
                row += ',';
            row += data.data()(i, k) != 0.0 ? '1' : '0';
        }
        out << row << '\n';
    }
}

inline void save_binary_csv(const std::string& path, const BinaryDataset& data)
{
    auto out = open_output(path);
    write_binary_csv(out, data);
}

/// Square matrix with a name header and a name column.
inline void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& names)
{
    out << "name";
    for (const auto& nm : names)
        out << ',' << nm;
    out << '\n';
    for (Index k = 0; k < m.rows(); ++k) {
        out << names[static_cast<std::size_t>(k)];
        for (Index l = 0; l < m.cols(); ++l)
            out << ',' << format_double(m(k, l));
        out << '\n';
    }
}

// ---------------------------------------------------------------- edge lists

struct EdgeRecord
{
    std::string a, b;
    double theta = std::numeric_limits<double>::quiet_NaN();
};

inline const char* kEdgeListHeader = "node_a,node_b,theta";

/// One "name_k,name_l,theta" line per edge with k < l, in index order,
/// after a header line. theta is NA when no coefficients are given.
inline void write_edge_list(std::ostream& out, const EdgeSet& edges, const std::vector<std::string>& names,
                            const std::optional<ThetaMatrix>& theta = std::nullopt)
{
    if (static_cast<Index>(names.size()) != edges.p())
        throw DimensionMismatch("name count differs from p");
    out << kEdgeListHeader << '\n';
    for (const auto& [k, l] : edges)
        out << names[static_cast<std::size_t>(k)] << ',' << names[static_cast<std::size_t>(l)] << ','
            << format_double(theta ? (*theta)(k, l) : std::numeric_limits<double>::quiet_NaN()) << '\n';
}

inline void save_edge_list(const std::string& path, const EdgeSet& edges, const std::vector<std::string>& names,
                           const std::optional<ThetaMatrix>& theta = std::nullopt)
{
    auto out = open_output(path);
    write_edge_list(out, edges, names, theta);
}

inline double parse_double(const std::string& token, std::size_t line, std::size_t col)
{
    if (token == "NA" || token.empty())
        return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used == token.size())
            return v;
    } catch (const std::exception&) {
    }
    throw ParseError(line, col, "not a number: '" + token + "'");
}

/// Edge records of a file; the header line is optional.
inline std::vector<EdgeRecord> read_edge_list(std::istream& in)
{
    std::vector<EdgeRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() == 3 && cells[0] == "node_a" && cells[1] == "node_b")
            continue;
        if (cells.size() != 2 && cells.size() != 3)
            throw ParseError(lineno, 1, "expected name_a,name_b[,theta]");
        if (cells[0].empty() || cells[1].empty())
            throw ParseError(lineno, cells[0].empty() ? 1 : 2, "empty node name");
        if (cells[0] == cells[1])
            throw ParseError(lineno, 2, "self-loop '" + cells[0] + "'");
        EdgeRecord r{cells[0], cells[1], std::numeric_limits<double>::quiet_NaN()};
        if (cells.size() == 3)
            r.theta = parse_double(cells[2], lineno, 3);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<EdgeRecord> read_edge_list(const std::string& path)
{
    auto in = open_input(path);
    return read_edge_list(in);
}

/// Edge set over `names` (order-insensitive pairs).
inline EdgeSet to_edge_set(const std::vector<EdgeRecord>& records, const std::vector<std::string>& names)
{
    std::map<std::string, Index> idx;
    for (std::size_t k = 0; k < names.size(); ++k)
        idx[names[k]] = static_cast<Index>(k);
    EdgeSet e(static_cast<Index>(names.size()));
    for (const auto& r : records) {
        const auto a = idx.find(r.a);
        const auto b = idx.find(r.b);
        if (a == idx.end() || b == idx.end())
            throw InvalidArgument("unknown node '" + (a == idx.end() ? r.a : r.b) + "'");
        e.insert(a->second, b->second);
    }
    return e;
}

/// Node names in first-seen order across several edge lists.
inline std::vector<std::string> node_names(std::initializer_list<const std::vector<EdgeRecord>*> lists)
{
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto* list : lists)
        for (const auto& r : *list)
            for (const auto* nm : {&r.a, &r.b})
                if (seen.insert(*nm).second)
                    names.push_back(*nm);
    return names;
}

// ---------------------------------------------------------------- config

inline DesignId parse_design_id(const std::string& text)
{
    static const std::map<std::string, DesignId> table = {{"T1", DesignId::T1}, {"T2", DesignId::T2},
                                                          {"T3", DesignId::T3}, {"T4", DesignId::T4},
                                                          {"T5", DesignId::T5}};
    std::string key;
    for (char c : text)
        key += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const auto it = table.find(trim(key));
    if (it == table.end())
        throw ConfigError("unknown design '" + text + "'");
    return it->second;
}

/// "T1" or "BLOCK(T3,5)".
inline DesignSpec parse_design(const std::string& text, std::uint64_t seed = kDefaultDesignSeed)
{
    const std::string t = trim(text);
    std::string upper;
    for (char c : t)
        upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper.rfind("BLOCK(", 0) == 0 && upper.back() == ')') {
        const auto parts = split_csv_line(t.substr(6, t.size() - 7));
        if (parts.size() != 2)
            throw ConfigError("expected BLOCK(design,copies), got '" + text + "'");
        int copies = 0;
        try {
            copies = std::stoi(parts[1]);
        } catch (const std::exception&) {
            throw ConfigError("bad block copy count in '" + text + "'");
        }
        if (copies < 1)
            throw ConfigError("block copy count must be >= 1 in '" + text + "'");
        return DesignSpec::make(parse_design_id(parts[0]), copies, seed);
    }
    return DesignSpec::make(parse_design_id(t), 1, seed);
}

/// Keys of the [campaign] section.
inline const std::vector<std::string>& campaign_keys()
{
    static const std::vector<std::string> keys = {
        "designs", "methods",   "sample_sizes", "replicates", "selection",     "grid_count",
        "grid_ratio", "seed",   "design_seed",  "threads",    "timing",        "mse",
        "output_dir", "gibbs_burn_in", "gibbs_thinning"};
    return keys;
}

namespace detail {

template <class T>
T config_number(const std::string& key, const std::string& value)
{
    T out{};
    const std::string v = trim(value);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("bad value for '" + key + "': '" + value + "'");
    return out;
}

inline bool config_bool(const std::string& key, const std::string& value)
{
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("bad boolean for '" + key + "': '" + value + "'");
}

} // namespace detail

/// Flat INI text with a single [campaign] section, e.g.
///
///   [campaign]
///   designs = T1, BLOCK(T3,5)
///   methods = GaussCor, SepLogit_OR
///   sample_sizes = 500, 2500
///   replicates = 50
///   selection = bic            ; or oracle
///
/// Unknown sections or keys are errors.
inline CampaignConfig parse_campaign_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("line ") + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, _] : tree)
        if (section != "campaign")
            throw ConfigError("unknown section [" + section + "]");
    const auto section = tree.get_child_optional("campaign");
    if (!section)
        throw ConfigError("missing [campaign] section");

    std::map<std::string, std::string> kv;
    for (const auto& [key, node] : *section) {
        if (std::find(campaign_keys().begin(), campaign_keys().end(), key) == campaign_keys().end())
            throw ConfigError("unknown key '" + key + "'");
        // strip trailing ';' or '#' comments
        std::string v = node.data();
        const auto c = v.find_first_of(";#");
        if (c != std::string::npos)
            v = v.substr(0, c);
        kv[key] = trim(v);
    }

    CampaignConfig cfg;
    std::uint64_t design_seed = kDefaultDesignSeed;
    if (kv.count("design_seed"))
        design_seed = detail::config_number<std::uint64_t>("design_seed", kv["design_seed"]);
    for (const char* required : {"designs", "methods", "sample_sizes"})
        if (!kv.count(required) || kv[required].empty())
            throw ConfigError(std::string("missing key '") + required + "'");
    for (const auto& d : split_list(kv["designs"]))
        cfg.designs.push_back(parse_design(d, design_seed));
    for (const auto& m : split_list(kv["methods"])) {
        try {
            cfg.methods.push_back(parse_method(m));
        } catch (const UnsupportedMethod& e) {
            throw ConfigError(e.what());
        }
    }
    for (const auto& s : split_list(kv["sample_sizes"])) {
        const auto n = detail::config_number<long long>("sample_sizes", s);
        if (n < 2)
            throw ConfigError("sample sizes must be >= 2");
        cfg.sample_sizes.push_back(static_cast<Index>(n));
    }
    if (kv.count("replicates"))
        cfg.replicates = detail::config_number<int>("replicates", kv["replicates"]);
    if (cfg.replicates < 1)
        throw ConfigError("replicates must be >= 1");
    if (kv.count("selection")) {
        std::string v = kv["selection"];
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        if (v == "bic")
            cfg.selection = SelectionMode::BIC;
        else if (v == "oracle")
            cfg.selection = SelectionMode::ORACLE;
        else
            throw ConfigError("selection must be bic or oracle");
    }
    if (cfg.selection == SelectionMode::ORACLE)
        for (MethodId m : cfg.methods)
            if (family(m) == MethodFamily::SEPLOGIT)
                throw ConfigError("oracle selection is not defined for " + to_string(m));
    if (kv.count("grid_count"))
        cfg.grid_count = detail::config_number<int>("grid_count", kv["grid_count"]);
    if (kv.count("grid_ratio"))
        cfg.grid_ratio = detail::config_number<double>("grid_ratio", kv["grid_ratio"]);
    if (cfg.grid_count < 2 || !(cfg.grid_ratio > 1.0))
        throw ConfigError("grid_count must be >= 2 and grid_ratio > 1");
    if (kv.count("seed"))
        cfg.seed = detail::config_number<std::uint64_t>("seed", kv["seed"]);
    if (kv.count("threads"))
        cfg.threads = detail::config_number<int>("threads", kv["threads"]);
    if (kv.count("timing")) {
        if (kv["timing"] == "wall")
            cfg.timing = true;
        else if (kv["timing"] == "none")
            cfg.timing = false;
        else
            throw ConfigError("timing must be wall or none");
    }
    if (kv.count("mse"))
        cfg.mse = detail::config_bool("mse", kv["mse"]);
    if (kv.count("output_dir"))
        cfg.output_dir = kv["output_dir"];
    if (kv.count("gibbs_burn_in"))
        cfg.gibbs.burn_in = detail::config_number<int>("gibbs_burn_in", kv["gibbs_burn_in"]);
    if (kv.count("gibbs_thinning"))
        cfg.gibbs.thinning = detail::config_number<int>("gibbs_thinning", kv["gibbs_thinning"]);
    if (cfg.gibbs.burn_in < 1 || cfg.gibbs.thinning < 1)
        throw ConfigError("gibbs_burn_in and gibbs_thinning must be >= 1");
    return cfg;
}

inline CampaignConfig load_campaign_config(const std::string& path)
{
    auto in = open_input(path);
    return parse_campaign_config(in);
}

// ---------------------------------------------------------------- reports

inline const char* kReportHeader =
    "design,n,replicate,method,lambda,POS,FPR,TPR,PRE,ACC,F1,time_s,time_inclusive_s,MSE,status";

/// Field quoted when it contains a comma, quote or newline.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"')
            q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + '"';
}

/// One row per (design, n, replicate, method). Failed cells carry NA metrics
/// and the error in `status`; time columns are NA when timing is off.
inline void write_report_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows)
{
    out << kReportHeader << '\n';
    for (const auto& r : rows) {
        const auto& c = r.summary;
        const bool ok = r.ok();
        auto num = [&](double v) { return ok ? format_double(v) : std::string("NA"); };
        out << csv_field(r.design) << ',' << r.n << ',' << r.replicate << ',' << to_string(r.method) << ','
            << num(r.lambda) << ',' << (ok ? std::to_string(c.pos) : "NA") << ',' << num(c.fpr) << ','
            << num(c.tpr) << ',' << num(c.precision) << ',' << num(c.accuracy) << ',' << num(c.f1) << ','
            << num(r.time_s) << ',' << num(r.time_inclusive_s) << ',' << num(r.mse) << ','
            << csv_field(r.status) << '\n';
    }
}

inline const char* kSummaryHeader =
    "design,n,method,replicates,failures,POS,POS_sd,FPR,FPR_sd,TPR,TPR_sd,PRE,PRE_sd,ACC,ACC_sd,F1,F1_sd,"
    "time_s,time_s_sd,time_inclusive_s,time_inclusive_s_sd,MSE,MSE_sd";

/// Means and standard deviations per (design, n, method).
inline void write_summary_csv(std::ostream& out, const std::vector<BenchmarkAggregate>& aggs)
{
    out << kSummaryHeader << '\n';
    for (const auto& a : aggs) {
        out << csv_field(a.design) << ',' << a.n << ',' << to_string(a.method) << ',' << a.replicates << ','
            << a.failures;
        for (const MeanSd* m : {&a.pos, &a.fpr, &a.tpr, &a.pre, &a.acc, &a.f1, &a.time_s, &a.time_inclusive_s,
                                &a.mse})
            out << ',' << format_double(m->mean) << ',' << format_double(m->sd);
        out << '\n';
    }
}

inline const char* kDevianceHeader = "lambda,edges,L_Ps,L_Ps_half,L_Po,L_G1,L_G2,L_G3";

inline void write_deviance_csv(std::ostream& out, const std::vector<DevianceRow>& rows)
{
    out << kDevianceHeader << '\n';
    for (const auto& r : rows)
        out << format_double(r.lambda) << ',' << r.edges << ',' << format_double(r.pseudo) << ','
            << format_double(r.pseudo_half) << ',' << format_double(r.exact) << ','
            << format_double(r.gauss_cov13) << ',' << format_double(r.gauss_cov) << ','
            << format_double(r.gauss_cor) << '\n';
}

inline const char* kBicHeader = "lambda,edges,df,loglik_term,score";

inline void write_bic_csv(std::ostream& out, const BicSelection& sel,
                          const std::vector<GraphEstimate>& path)
{
    out << kBicHeader << '\n';
    for (std::size_t j = 0; j < sel.scores.size(); ++j) {
        const auto& b = sel.scores[j];
        out << format_double(b.lambda) << ',' << path[sel.scored_index[j]].edges.size() << ',' << b.df << ','
            << format_double(b.loglik_term) << ',' << format_double(b.score) << '\n';
    }
}

} // namespace isinglab
