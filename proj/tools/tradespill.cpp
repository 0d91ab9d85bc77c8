// tradespill: file-based pipeline from raw trade flows to gravity regressions.
//
//   synth -> ingest -> proximity -> relatedness -> gravity / summary -> trend
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tradespill/complexity.hpp"
#include "tradespill/error.hpp"
#include "tradespill/gravity.hpp"
#include "tradespill/ingest.hpp"
#include "tradespill/oracle.hpp"
#include "tradespill/relatedness.hpp"
#include "tradespill/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tradespill;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Bad flag values discovered after parsing; exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(std::istream& in) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("missing --") + what);
    if (!fs::exists(path)) throw DataError(std::string("missing input file for --") + what + ": " + path);
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

/// `<stem><suffix>` next to `path`.
std::string sibling(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

class Manifest {
public:
    Manifest(std::string command, const CLI::App& sub)
        : command_(std::move(command)), config_(sub.config_to_str(true, false)),
          start_(std::chrono::steady_clock::now()) {}

    void input(const std::string& path) { inputs_.push_back(path); }
    void output(const std::string& path) { outputs_.push_back(path); }
    void count(const std::string& key, std::size_t n) { rows_[key] = n; }
    void note(const std::string& key, json value) { notes_[key] = std::move(value); }

    void write(const std::string& path) const {
        json doc;
        doc["command"] = command_;
        doc["version"] = kVersion;
        auto files = [](const std::vector<std::string>& paths) {
            json arr = json::array();
            for (const auto& p : paths) {
                std::ifstream in(p, std::ios::binary);
                arr.push_back({{"path", p}, {"bytes", fs::file_size(p)}, {"fnv1a64", hex64(fnv1a(in))}});
            }
            return arr;
        };
        doc["inputs"] = files(inputs_);
        doc["outputs"] = files(outputs_);
        doc["config"] = config_;
        std::istringstream cfg(config_);
        doc["config_fnv1a64"] = hex64(fnv1a(cfg));
        doc["rows"] = rows_;
        if (!notes_.empty()) doc["notes"] = notes_;
        doc["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        auto out = open_output(path);
        out << doc.dump(2) << '\n';
    }

private:
    std::string command_;
    std::string config_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
    json rows_ = json::object();
    json notes_ = json::object();
};

YearRange parse_period(const std::string& text) {
    try {
        return YearRange::parse(text);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

/// A reconciled tensor from a trade CSV; single-reporter files pass through.
TradeTensor load_tensor(const std::string& path, Manifest& manifest) {
    require_file(path, "trade");
    manifest.input(path);
    auto load = load_trade_csv(path);
    if (!load.rejects.empty()) {
        throw DataError(path + ": " + std::to_string(load.rejects.size()) + " invalid row(s), first at line " +
                        std::to_string(load.rejects.front().line) + " (" + load.rejects.front().reason +
                        "); run ingest first");
    }
    auto rec = reconcile(load.records);
    manifest.count("trade_cells", rec.tensor.cell_count());
    return std::move(rec.tensor);
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string trade, countries, out, rejects, policy = "importer";
    bool no_filter = false;
    double min_population = 1.2e6, min_trade = 1e9;
    int trade_year = 2008;
    std::optional<int> population_year;
    std::vector<std::string> exclude{"IRQ", "TCD", "MAC"};
};

void run_ingest(const IngestArgs& a, const CLI::App& sub) {
    Manifest m("ingest", sub);
    require_file(a.trade, "trade");
    m.input(a.trade);

    TradeLoadOptions options;
    CountryTable meta;
    if (!a.countries.empty()) {
        require_file(a.countries, "countries");
        m.input(a.countries);
        meta = load_country_csv(a.countries);
        options.known_countries = meta.codes();
    } else if (!a.no_filter) {
        throw UsageError("--countries is required unless --no-filter is given");
    }

    auto load = load_trade_csv(a.trade, options);
    auto rec = reconcile(load.records, parse_reconcile_policy(a.policy));
    m.count("rows_read", load.rows_read);
    m.count("zero_dropped", load.zero_dropped);
    m.count("rejected", load.rejects.size());
    m.count("reconciled_cells", rec.tensor.cell_count());
    m.note("audit", {{"exporter_only", rec.audit.exporter_only},
                     {"importer_only", rec.audit.importer_only},
                     {"both", rec.audit.both},
                     {"discrepant_both", rec.audit.discrepant_both}});

    TradeTensor tensor = std::move(rec.tensor);
    if (!a.no_filter) {
        FilterConfig rules;
        rules.min_population = a.min_population;
        rules.min_trade = a.min_trade;
        rules.trade_year = a.trade_year;
        rules.population_year = a.population_year;
        rules.exclude.clear();
        for (const auto& c : a.exclude) {
            const auto code = CountryCode::parse(c);
            if (!code) throw UsageError("invalid country code in --exclude: " + c);
            rules.exclude.push_back(*code);
        }
        auto filtered = filter_countries(tensor, meta, rules);
        json removed = json::array();
        for (const auto& r : filtered.removed) removed.push_back({{"country", r.code.str()}, {"reason", r.reason}});
        m.note("removed_countries", removed);
        tensor = std::move(filtered.tensor);
    }
    m.count("output_cells", tensor.cell_count());

    {
        auto out = open_output(a.out);
        write_tensor_csv(out, tensor);
    }
    m.output(a.out);
    const auto rejects = a.rejects.empty() ? sibling(a.out, ".rejects.csv") : a.rejects;
    {
        auto out = open_output(rejects);
        write_rejects_csv(out, load.rejects);
    }
    m.output(rejects);
    m.write(a.out + ".manifest.json");
    std::cerr << "ingest: " << load.rows_read << " rows, " << load.rejects.size() << " rejected, "
              << tensor.cell_count() << " cells written\n";
}

// ---------------------------------------------------------------------------

struct RcaArgs {
    std::string trade, out, window = "2000-2015";
};

void run_rca(const RcaArgs& a, const CLI::App& sub) {
    Manifest m("rca", sub);
    const auto tensor = load_tensor(a.trade, m);
    const auto rca = compute_rca(tensor, parse_period(a.window));
    {
        auto out = open_output(a.out);
        write_rca_csv(out, rca);
    }
    m.output(a.out);
    m.write(a.out + ".manifest.json");
}

struct ProximityArgs {
    std::string trade, out, histogram, window = "2000-2015";
    double threshold = 1.0, cutoff = 0.0;
    std::size_t bins = 50;
};

void run_proximity(const ProximityArgs& a, const CLI::App& sub, unsigned threads) {
    Manifest m("proximity", sub);
    const auto tensor = load_tensor(a.trade, m);
    const auto rca = compute_rca(tensor, parse_period(a.window));
    const auto phi = compute_proximity(binarize(rca, a.threshold), threads);
    const auto edges = export_product_space(phi, a.cutoff);
    {
        auto out = open_output(a.out);
        write_edges_csv(out, phi, edges);
    }
    m.output(a.out);
    const auto hist_path = a.histogram.empty() ? sibling(a.out, ".hist.csv") : a.histogram;
    {
        auto out = open_output(hist_path);
        const auto hist = proximity_histogram(phi, a.bins);
        write_histogram_csv(out, hist);
    }
    m.output(hist_path);
    m.count("products", phi.size());
    m.count("edges", edges.size());
    m.write(a.out + ".manifest.json");
}

struct RelatednessArgs {
    std::string trade, proximity, dyads, out, years;
    bool dense = false;
};

void run_relatedness(const RelatednessArgs& a, const CLI::App& sub, unsigned threads) {
    Manifest m("relatedness", sub);
    const auto tensor = load_tensor(a.trade, m);
    require_file(a.proximity, "proximity");
    require_file(a.dyads, "dyads");
    m.input(a.proximity);
    m.input(a.dyads);
    std::ifstream pin(a.proximity);
    const auto phi = read_proximity_csv(pin, a.proximity);
    const auto dyads = load_dyad_csv(a.dyads);
    const auto weights = DistanceWeights::from_dyads(tensor.countries(), dyads);

    std::optional<YearRange> range;
    if (!a.years.empty()) range = parse_period(a.years);
    RelatednessOptions options;
    options.dense = a.dense;
    options.threads = threads;
    std::vector<RelatednessTable> tables;
    std::size_t rows = 0, skipped = 0;
    for (int year : tensor.years()) {
        if (range && !range->contains(year)) continue;
        tables.push_back(compute_relatedness(tensor, phi, weights, year, options));
        rows += tables.back().rows.size();
        skipped += tables.back().skipped_products.size();
    }
    if (tables.empty()) throw DataError("no trade data in the requested years");
    {
        auto out = open_output(a.out);
        write_relatedness_csv(out, tensor, tables);
    }
    m.output(a.out);
    m.count("rows", rows);
    m.count("skipped_product_years", skipped);
    m.write(a.out + ".manifest.json");
    if (skipped) std::cerr << "relatedness: " << skipped << " product-year(s) with zero proximity skipped\n";
}

// ---------------------------------------------------------------------------

struct ModelArgs {
    std::string trade, relatedness, countries, dyads;
    int horizon = 2;
    std::string zeros = "drop";
    bool standardize_response = false;
};

struct ModelData {
    TradeTensor tensor;
    std::vector<RelatednessTable> relatedness;
    CountryTable countries;
    DyadTable dyads;

    GravityInputs inputs() const { return {tensor, relatedness, countries, dyads}; }
};

ModelData load_model(const ModelArgs& a, Manifest& m) {
    ModelData d;
    d.tensor = load_tensor(a.trade, m);
    require_file(a.relatedness, "relatedness");
    require_file(a.countries, "countries");
    require_file(a.dyads, "dyads");
    m.input(a.relatedness);
    m.input(a.countries);
    m.input(a.dyads);
    std::ifstream rin(a.relatedness);
    d.relatedness = read_relatedness_csv(rin, a.relatedness, d.tensor);
    d.countries = load_country_csv(a.countries);
    d.dyads = load_dyad_csv(a.dyads);
    return d;
}

DatasetOptions dataset_options(const ModelArgs& a) {
    DatasetOptions o;
    o.horizon = a.horizon;
    o.zeros = a.zeros == "log1p" ? ZeroPolicy::Log1p : ZeroPolicy::Drop;
    return o;
}

struct GravityArgs {
    ModelArgs model;
    std::vector<std::string> periods;
    std::string split = "none", lall, out, table, trend, rca_window;
    double alpha = 0.1;
};

void run_gravity(const GravityArgs& a, const CLI::App& sub, unsigned threads) {
    Manifest m("gravity", sub);
    std::vector<YearRange> periods;
    for (const auto& p : a.periods) periods.push_back(parse_period(p));
    if (periods.empty()) {
        if (a.split == "period") {
            periods = {{2000, 2006}, {2007, 2012}, {2012, 2015}};
        } else {
            periods = {{2000, 2006}};
        }
    }
    if ((a.split == "exporter" || a.split == "lall") && periods.size() != 1) {
        throw UsageError("--split " + a.split + " takes a single --period");
    }
    if (a.split == "lall" && a.lall.empty()) throw UsageError("--split lall requires --lall");

    const auto data = load_model(a.model, m);
    const auto dopts = dataset_options(a.model);
    FitOptions fopts;
    fopts.standardize_response = a.model.standardize_response;
    fopts.threads = threads;

    SplitRun run;
    if (a.split == "none" || a.split == "period") {
        run = run_period_regressions(data.inputs(), periods, dopts, fopts);
    } else {
        const auto dataset = build_dataset(data.inputs(), periods.front(), dopts);
        m.count("dataset_rows", dataset.rows.size());
        m.count("dropped_exits", dataset.dropped_exits);
        m.count("dropped_undefined", dataset.dropped_undefined);
        SplitAssignment split;
        if (a.split == "exporter") {
            const auto window = a.rca_window.empty() ? YearRange{periods.front().first, periods.front().first}
                                                     : parse_period(a.rca_window);
            split = assign_exporter_classes(dataset, compute_rca(data.tensor, window));
        } else {
            require_file(a.lall, "lall");
            m.input(a.lall);
            split = assign_lall_categories(dataset, data.tensor.products(), load_lall_csv(a.lall));
        }
        run = run_split_regressions(dataset, split, fopts);
    }
    for (const auto& w : run.warnings) std::cerr << "gravity: warning: " << w << '\n';
    m.note("warnings", run.warnings);
    for (const auto& r : run.results) m.count("n[" + r.split_key + "]", r.n);

    {
        auto out = open_output(a.out);
        write_regressions_json(out, run.results);
    }
    m.output(a.out);
    const auto table = a.table.empty() ? sibling(a.out, ".table.csv") : a.table;
    {
        auto out = open_output(table);
        write_regression_table_csv(out, run.results);
    }
    m.output(table);

    if (a.split == "lall") {
        if (run.results.size() != 5) {
            m.write(a.out + ".manifest.json");
            throw DataError("trend test needs all five technology categories, got " +
                            std::to_string(run.results.size()));
        }
        const auto trend_path = a.trend.empty() ? sibling(a.out, ".trend.csv") : a.trend;
        const auto trends = coefficient_trends(run.results, a.alpha);
        auto out = open_output(trend_path);
        write_trend_csv(out, trends);
        out.close();
        m.output(trend_path);
    }
    if (run.results.empty()) {
        m.write(a.out + ".manifest.json");
        throw DataError("no regression could be fitted");
    }
    m.write(a.out + ".manifest.json");
}

struct SummaryArgs {
    ModelArgs model;
    std::string period = "2000-2006", out, correlation;
    bool raw = false;
};

void run_summary(const SummaryArgs& a, const CLI::App& sub) {
    Manifest m("summary", sub);
    const auto data = load_model(a.model, m);
    auto dataset = build_dataset(data.inputs(), parse_period(a.period), dataset_options(a.model));
    m.count("dataset_rows", dataset.rows.size());
    if (!a.raw) standardize(dataset.rows, a.model.standardize_response);
    {
        auto out = open_output(a.out);
        const auto stats = summary_stats(dataset.rows);
        write_summary_csv(out, stats);
    }
    m.output(a.out);
    const auto corr_path = a.correlation.empty() ? sibling(a.out, ".corr.csv") : a.correlation;
    {
        auto out = open_output(corr_path);
        const auto corr = correlation_matrix(dataset.rows);
        write_correlation_csv(out, corr);
    }
    m.output(corr_path);
    m.write(a.out + ".manifest.json");
}

// ---------------------------------------------------------------------------

struct TrendArgs {
    std::string in, coefficients, out;
    std::vector<std::string> keys;
    double alpha = 0.1;
};

void run_trend(const TrendArgs& a, const CLI::App& sub) {
    Manifest m("trend", sub);
    std::vector<TrendRow> rows;
    if (!a.in.empty()) {
        require_file(a.in, "in");
        m.input(a.in);
        std::ifstream in(a.in);
        auto results = read_regressions_json(in, a.in);
        std::vector<RegressionResult> ordered;
        if (a.keys.empty()) {
            ordered = results;
        } else {
            for (const auto& k : a.keys) {
                bool found = false;
                for (const auto& r : results) {
                    if (r.split_key == k) {
                        ordered.push_back(r);
                        found = true;
                    }
                }
                if (!found) throw DataError(a.in + ": no regression with split_key '" + k + "'");
            }
        }
        if (ordered.size() != 5) {
            throw DataError("trend test needs five regressions in rank order, got " + std::to_string(ordered.size()));
        }
        rows = coefficient_trends(ordered, a.alpha);
    } else {
        // variable,beta,se with five rows per variable in rank order
        require_file(a.coefficients, "coefficients");
        m.input(a.coefficients);
        std::ifstream in(a.coefficients);
        std::string line;
        std::map<std::string, std::vector<TrendEstimate>> series;
        std::vector<std::string> order;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || (lineno == 1 && line.rfind("variable", 0) == 0)) continue;
            std::vector<std::string> f;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
            if (f.size() != 3) throw ParseError(a.coefficients, lineno, "expected variable,beta,se");
            TrendEstimate e;
            try {
                e.beta = std::stod(f[1]);
                e.se = std::stod(f[2]);
            } catch (const std::exception&) {
                throw ParseError(a.coefficients, lineno, "invalid number");
            }
            if (!series.count(f[0])) order.push_back(f[0]);
            series[f[0]].push_back(e);
        }
        for (const auto& name : order) {
            const auto& s = series[name];
            if (s.size() != 5) {
                throw DataError(a.coefficients + ": variable '" + name + "' has " + std::to_string(s.size()) +
                                " estimates, need 5");
            }
            for (const auto& e : s) {
                if (!(e.se > 0.0)) throw DataError(a.coefficients + ": variable '" + name + "' has a non-positive SE");
            }
            rows.push_back({name, trend_test(s, a.alpha)});
        }
    }
    {
        auto out = open_output(a.out);
        write_trend_csv(out, rows);
    }
    m.output(a.out);
    m.count("variables", rows.size());
    m.write(a.out + ".manifest.json");
}

struct SynthArgs {
    std::string out_dir;
    std::uint64_t seed = 42;
    int countries = 8, products = 12, years = 4, first_year = 2000, horizon = 2;
    double sparsity = 0.5, sigma = 1.0;
};

void run_synth(const SynthArgs& a, const CLI::App& sub, unsigned threads) {
    Manifest m("synth", sub);
    oracle::SyntheticWorldConfig cfg;
    cfg.n_countries = a.countries;
    cfg.n_products = a.products;
    cfg.n_years = a.years;
    cfg.first_year = a.first_year;
    cfg.horizon = a.horizon;
    cfg.sparsity = a.sparsity;
    cfg.noise_sigma = a.sigma;
    cfg.seed = a.seed;
    cfg.threads = threads;
    const auto world = oracle::generate_world(cfg);
    const auto files = oracle::write_world(a.out_dir, world);
    for (const auto& p : {files.trade, files.countries, files.dyads, files.lall, files.planted}) m.output(p.string());
    m.count("cells", world.tensor.cell_count());
    m.write((fs::path(a.out_dir) / "synth.manifest.json").string());
    std::cerr << "synth: " << world.tensor.cell_count() << " cells over " << world.period.str()
              << "; proximity window " << world.proximity_window.str() << '\n';
}

void add_model_options(CLI::App* sub, ModelArgs& a) {
    sub->add_option("--trade", a.trade, "Reconciled trade CSV (output of ingest)");
    sub->add_option("--relatedness", a.relatedness, "Relatedness CSV");
    sub->add_option("--countries", a.countries, "Country CSV: code,year,population,gdp_per_capita");
    sub->add_option("--dyads", a.dyads, "Dyad CSV");
    sub->add_option("--horizon", a.horizon, "Years ahead of the response")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--zeros", a.zeros, "Cells that stop trading: drop, or keep with log(1+x)")
        ->check(CLI::IsMember({"drop", "log1p"}))
        ->capture_default_str();
    sub->add_flag("--standardize-response", a.standardize_response, "Z-score the response as well");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trade relatedness and extended gravity pipeline", "tradespill"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "TOML/INI configuration file; command-line flags override it");
    app.require_subcommand(1);
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads for compute stages (0 = all cores)")->capture_default_str();

    IngestArgs ingest;
    auto* s_ingest = app.add_subcommand("ingest", "Load, reconcile and filter raw trade flows");
    s_ingest->add_option("--trade", ingest.trade, "Raw trade CSV")->required();
    s_ingest->add_option("--countries", ingest.countries, "Country CSV");
    s_ingest->add_option("--out", ingest.out, "Reconciled trade CSV")->required();
    s_ingest->add_option("--rejects", ingest.rejects, "Rejected rows CSV (default <out>.rejects.csv)");
    s_ingest->add_option("--policy", ingest.policy, "Two-sided reports: importer, exporter, max or mean")
        ->check(CLI::IsMember({"importer", "exporter", "max", "mean"}))
        ->capture_default_str();
    s_ingest->add_flag("--no-filter", ingest.no_filter, "Skip the country exclusion rules");
    s_ingest->add_option("--min-population", ingest.min_population, "Population floor")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s_ingest->add_option("--min-trade", ingest.min_trade, "Floor on total trade in --trade-year (USD)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s_ingest->add_option("--trade-year", ingest.trade_year, "Year of the trade-volume rule")->capture_default_str();
    s_ingest->add_option("--population-year", ingest.population_year,
                         "Year of the population rule (default: first year in the data)");
    s_ingest->add_option("--exclude", ingest.exclude, "Countries always removed")->capture_default_str();

    RcaArgs rca;
    auto* s_rca = app.add_subcommand("rca", "Revealed comparative advantage over a year window");
    s_rca->add_option("--trade", rca.trade, "Reconciled trade CSV")->required();
    s_rca->add_option("--window", rca.window, "Years pooled, e.g. 2000-2015")->capture_default_str();
    s_rca->add_option("--out", rca.out, "RCA CSV")->required();

    ProximityArgs prox;
    auto* s_prox = app.add_subcommand("proximity", "Product-space proximity matrix and its histogram");
    s_prox->add_option("--trade", prox.trade, "Reconciled trade CSV")->required();
    s_prox->add_option("--window", prox.window, "Years pooled for RCA")->capture_default_str();
    s_prox->add_option("--threshold", prox.threshold, "RCA threshold for advantage")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s_prox->add_option("--cutoff", prox.cutoff, "Smallest phi written")->check(CLI::Range(0.0, 1e9))->capture_default_str();
    s_prox->add_option("--bins", prox.bins, "Histogram bins")->check(CLI::PositiveNumber)->capture_default_str();
    s_prox->add_option("--histogram", prox.histogram, "Histogram CSV (default <out>.hist.csv)");
    s_prox->add_option("--out", prox.out, "Edge CSV")->required();

    RelatednessArgs rel;
    auto* s_rel = app.add_subcommand("relatedness", "Product, importer and exporter relatedness per cell");
    s_rel->add_option("--trade", rel.trade, "Reconciled trade CSV")->required();
    s_rel->add_option("--proximity", rel.proximity, "Edge CSV from proximity")->required();
    s_rel->add_option("--dyads", rel.dyads, "Dyad CSV (distances)")->required();
    s_rel->add_option("--years", rel.years, "Restrict to a year range");
    s_rel->add_flag("--dense", rel.dense, "Evaluate every (o, p, d), not only active cells");
    s_rel->add_option("--out", rel.out, "Relatedness CSV")->required();

    GravityArgs grav;
    auto* s_grav = app.add_subcommand("gravity", "Fit the extended gravity model");
    add_model_options(s_grav, grav.model);
    s_grav->add_option("--period", grav.periods,
                       "Period(s); default 2000-2006, or the three standard periods with --split period");
    s_grav->add_option("--split", grav.split, "none, period, exporter or lall")
        ->check(CLI::IsMember({"none", "period", "exporter", "lall"}))
        ->capture_default_str();
    s_grav->add_option("--lall", grav.lall, "Technology concordance CSV: hs4,sitc3,category");
    s_grav->add_option("--rca-window", grav.rca_window, "RCA years for exporter classes (default: period start)");
    s_grav->add_option("--alpha", grav.alpha, "Trend significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    s_grav->add_option("--out", grav.out, "Regression JSON")->required();
    s_grav->add_option("--table", grav.table, "Table CSV (default <out>.table.csv)");
    s_grav->add_option("--trend", grav.trend, "Trend CSV for --split lall (default <out>.trend.csv)");

    SummaryArgs summ;
    auto* s_summ = app.add_subcommand("summary", "Summary statistics and correlation matrix of a sample");
    add_model_options(s_summ, summ.model);
    s_summ->add_option("--period", summ.period, "Period")->capture_default_str();
    s_summ->add_flag("--raw", summ.raw, "Describe variables before standardisation");
    s_summ->add_option("--out", summ.out, "Summary CSV")->required();
    s_summ->add_option("--correlation", summ.correlation, "Correlation CSV (default <out>.corr.csv)");

    TrendArgs trend;
    auto* s_trend = app.add_subcommand("trend", "Trend of coefficients across five ranked categories");
    auto* t_in = s_trend->add_option("--in", trend.in, "Regression JSON with five results");
    auto* t_csv = s_trend->add_option("--coefficients", trend.coefficients, "CSV variable,beta,se (5 rows each)");
    t_in->excludes(t_csv);
    s_trend->add_option("--keys", trend.keys, "split_key order to use from --in");
    s_trend->add_option("--alpha", trend.alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    s_trend->add_option("--out", trend.out, "Trend CSV")->required();

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "Write a synthetic world with planted coefficients");
    s_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();
    s_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    s_synth->add_option("--countries", synth.countries, "Countries")->check(CLI::Range(2, 17576))->capture_default_str();
    s_synth->add_option("--products", synth.products, "Products")->check(CLI::Range(1, 9899))->capture_default_str();
    s_synth->add_option("--years", synth.years, "Years generated")->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--first-year", synth.first_year, "First year")->capture_default_str();
    s_synth->add_option("--horizon", synth.horizon, "Years ahead of the response")->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--sparsity", synth.sparsity, "Fraction of active cells")
        ->check(CLI::Range(1e-9, 1.0))
        ->capture_default_str();
    s_synth->add_option("--sigma", synth.sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber)->capture_default_str();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        const auto used = app.get_subcommands();
        std::cerr << '\n' << (used.empty() ? app.help() : used.back()->help());
        return 2;
    }

    try {
        if (s_ingest->parsed()) run_ingest(ingest, *s_ingest);
        if (s_rca->parsed()) run_rca(rca, *s_rca);
        if (s_prox->parsed()) run_proximity(prox, *s_prox, threads);
        if (s_rel->parsed()) run_relatedness(rel, *s_rel, threads);
        if (s_grav->parsed()) run_gravity(grav, *s_grav, threads);
        if (s_summ->parsed()) run_summary(summ, *s_summ);
        if (s_trend->parsed()) {
            if (trend.in.empty() && trend.coefficients.empty()) throw UsageError("trend needs --in or --coefficients");
            run_trend(trend, *s_trend);
        }
        if (s_synth->parsed()) run_synth(synth, *s_synth, threads);
    } catch (const UsageError& e) {
        std::cerr << "tradespill: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "tradespill: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "tradespill: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
