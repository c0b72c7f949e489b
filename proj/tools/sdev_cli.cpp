// Command-line front end. Talks to the library through the C API only.
#include <sdev/sdev.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{kExitUsage, msg}; }

void check(sdev_status s) {
    if (s == SDEV_OK) return;
    const bool usage = s == SDEV_ERR_INVALID_ARGUMENT || s == SDEV_ERR_PARSE || s == SDEV_ERR_VOCABULARY ||
                       s == SDEV_ERR_CONFIG;
    throw Failure{usage ? kExitUsage : kExitRuntime,
                  std::string(sdev_status_name(s)) + ": " + sdev_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using CohortPtr = std::unique_ptr<sdev_cohort, Deleter<sdev_cohort, sdev_cohort_free>>;
using AlignmentPtr = std::unique_ptr<sdev_alignment, Deleter<sdev_alignment, sdev_alignment_free>>;
using ModelPtr = std::unique_ptr<sdev_model, Deleter<sdev_model, sdev_model_free>>;
using EvaluationPtr = std::unique_ptr<sdev_evaluation, Deleter<sdev_evaluation, sdev_evaluation_free>>;

struct RunConfig {
    std::string subcommand;
    std::string manifest;
    std::string out;
    std::string rates = "2..12,12.5";
    std::uint64_t seed = 1;
    std::uint32_t procedures = 11;
    double perturbation_rate = -1;
    double idle_gap_rate = -1;
    double event_fraction = -1;
    std::uint32_t jobs = 1;
    double dmax_factor = 1.5;
    double smoothing = 1.0;
    bool em = false;
    std::uint32_t em_max_iter = 50;
    double em_tol = 1e-6;
    std::string decode = "viterbi";
    std::uint32_t dba_max_iter = 30;
    std::uint32_t dba_patience = 3;
    std::string config_path;
    std::size_t stop_after_rates = 0;
};

std::string format_rate(double hz) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", hz);
    return buf;
}

// "2..12,12.5" -> {2, 3, ..., 12, 12.5}; every rate must be 2..12 or 12.5.
std::vector<double> parse_rates(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            usage_error("invalid rate '" + s + "'");
        }
    };
    while (std::getline(ss, item, ',')) {
        if (item.empty()) usage_error("empty entry in rate list");
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(number(item));
            continue;
        }
        const double lo = number(item.substr(0, dots));
        const double hi = number(item.substr(dots + 2));
        if (lo > hi || lo != std::floor(lo) || hi != std::floor(hi)) usage_error("invalid rate range '" + item + "'");
        for (double r = lo; r <= hi; r += 1) out.push_back(r);
    }
    if (out.empty()) usage_error("no sampling rates given");
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = out[i];
        const bool ok = r == 12.5 || (r >= 2 && r <= 12 && r == std::floor(r));
        if (!ok) usage_error("sampling rate " + format_rate(r) + " outside {2..12, 12.5}");
        for (std::size_t j = 0; j < i; ++j)
            if (out[j] == r) usage_error("sampling rate " + format_rate(r) + " listed twice");
    }
    return out;
}

json config_json(const RunConfig& c) {
    json j;
    j["subcommand"] = c.subcommand;
    if (c.subcommand == "simulate") {
        j["seed"] = c.seed;
        j["procedures"] = c.procedures;
        j["perturbation_rate"] = c.perturbation_rate;
        j["idle_gap_rate"] = c.idle_gap_rate;
        j["event_fraction"] = c.event_fraction;
        return j;
    }
    j["manifest"] = c.manifest;
    j["rates"] = c.rates;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["dba"] = {{"max_iter", c.dba_max_iter}, {"patience", c.dba_patience}};
    j["hsmm"] = {{"max_duration_factor", c.dmax_factor},
                 {"smoothing", c.smoothing},
                 {"em", c.em},
                 {"em_max_iter", c.em_max_iter},
                 {"em_tol", c.em_tol},
                 {"decode", c.decode}};
    return j;
}

// Fills `c` from a previous run manifest; the output directory stays as given.
void apply_config_file(RunConfig& c) {
    std::ifstream in(c.config_path);
    if (!in) usage_error("cannot open config " + c.config_path);
    json j;
    try {
        j = json::parse(in).at("config");
        if (j.at("subcommand").get<std::string>() != c.subcommand)
            usage_error("config was written by '" + j.at("subcommand").get<std::string>() + "'");
        if (c.subcommand == "simulate") {
            c.seed = j.at("seed");
            c.procedures = j.at("procedures");
            c.perturbation_rate = j.at("perturbation_rate");
            c.idle_gap_rate = j.at("idle_gap_rate");
            c.event_fraction = j.at("event_fraction");
            return;
        }
        c.manifest = j.at("manifest");
        c.rates = j.at("rates");
        c.seed = j.at("seed");
        c.jobs = j.at("jobs");
        c.dba_max_iter = j.at("dba").at("max_iter");
        c.dba_patience = j.at("dba").at("patience");
        const auto& h = j.at("hsmm");
        c.dmax_factor = h.at("max_duration_factor");
        c.smoothing = h.at("smoothing");
        c.em = h.at("em");
        c.em_max_iter = h.at("em_max_iter");
        c.em_tol = h.at("em_tol");
        c.decode = h.at("decode");
    } catch (const json::exception& e) {
        usage_error("malformed config " + c.config_path + ": " + e.what());
    }
}

sdev_pipeline_options pipeline_options(const RunConfig& c) {
    sdev_pipeline_options o;
    sdev_pipeline_options_default(&o);
    o.dba_max_iter = c.dba_max_iter;
    o.dba_patience = c.dba_patience;
    o.max_duration_factor = c.dmax_factor;
    o.smoothing = c.smoothing;
    o.em = c.em ? 1 : 0;
    o.em_max_iter = c.em_max_iter;
    o.em_tol = c.em_tol;
    if (c.decode == "viterbi")
        o.decode_mode = SDEV_DECODE_VITERBI;
    else if (c.decode == "posterior")
        o.decode_mode = SDEV_DECODE_POSTERIOR;
    else
        usage_error("decode mode must be viterbi or posterior");
    return o;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) throw Failure{kExitRuntime, "cannot write " + tmp.string()};
    }
    fs::rename(tmp, path);
}

// run_manifest.json in the output directory; "status" stays "incomplete"
// until every output of the run has been written.
class RunManifest {
public:
    RunManifest(const RunConfig& c, fs::path dir) : dir_(std::move(dir)) {
        doc_["format"] = "sdev-run/1";
        doc_["version"] = sdev_version();
        doc_["status"] = "incomplete";
        doc_["config"] = config_json(c);
        doc_["completed_rates"] = json::array();
        doc_["outputs"] = json::array();
        save();
    }
    void add_rate(double hz) {
        doc_["completed_rates"].push_back(format_rate(hz));
        save();
    }
    void add_output(const std::string& name) {
        for (const auto& o : doc_["outputs"])
            if (o == name) return;
        doc_["outputs"].push_back(name);
    }
    void complete() {
        doc_["status"] = "complete";
        save();
    }

private:
    void save() { write_text_atomic(dir_ / "run_manifest.json", doc_.dump(2) + "\n"); }
    fs::path dir_;
    json doc_;
};

CohortPtr load(const RunConfig& c) {
    if (c.manifest.empty()) usage_error("--manifest is required");
    sdev_cohort* raw = nullptr;
    check(sdev_cohort_load(c.manifest.c_str(), &raw));
    return CohortPtr(raw);
}

double single_rate(const RunConfig& c) {
    const auto rates = parse_rates(c.rates);
    if (rates.size() != 1) usage_error("this subcommand takes exactly one rate");
    return rates.front();
}

void cmd_simulate(const RunConfig& c) {
    sdev_generator_options g;
    sdev_generator_options_default(&g);
    g.seed = c.seed;
    g.cohort_size = c.procedures;
    if (c.perturbation_rate >= 0) g.perturbation_rate = c.perturbation_rate;
    if (c.idle_gap_rate >= 0) g.idle_gap_rate = c.idle_gap_rate;
    g.event_fraction = c.event_fraction;
    sdev_cohort* raw = nullptr;
    check(sdev_cohort_simulate(&g, &raw));
    CohortPtr cohort(raw);
    RunManifest run(c, c.out);
    check(sdev_cohort_write(cohort.get(), c.out.c_str()));
    for (const char* f : {"manifest.json", "vocabulary.json", "ground_truth.json"}) run.add_output(f);
    run.complete();
    std::cerr << "simulated " << sdev_cohort_size(cohort.get()) << " procedures into " << c.out << "\n";
}

void cmd_ingest(const RunConfig& c) {
    const auto rates = parse_rates(c.rates);
    auto cohort = load(c);
    RunManifest run(c, c.out);
    for (double r : rates) {
        check(sdev_cohort_write_sampled(cohort.get(), r, c.out.c_str()));
        run.add_rate(r);
    }
    run.complete();
    std::cerr << "sampled " << sdev_cohort_size(cohort.get()) << " procedures at " << rates.size() << " rate(s)\n";
}

void cmd_align(const RunConfig& c) {
    const double rate = single_rate(c);
    const auto opts = pipeline_options(c);
    auto cohort = load(c);
    RunManifest run(c, c.out);
    sdev_alignment* raw = nullptr;
    check(sdev_align(cohort.get(), rate, &opts, &raw));
    AlignmentPtr a(raw);
    check(sdev_alignment_write(a.get(), c.out.c_str()));
    run.add_output("standard_process.csv");
    run.add_output("aligned.csv");
    run.add_rate(rate);
    run.complete();
    std::cerr << "aligned length " << sdev_alignment_length(a.get()) << " after " << sdev_alignment_iterations(a.get())
              << " DBA iteration(s), cost " << sdev_alignment_cost(a.get()) << "\n";
}

void cmd_train(const RunConfig& c) {
    const double rate = single_rate(c);
    const auto opts = pipeline_options(c);
    auto cohort = load(c);
    RunManifest run(c, c.out);
    sdev_model* raw = nullptr;
    check(sdev_model_train(cohort.get(), rate, &opts, &raw));
    ModelPtr m(raw);
    check(sdev_model_save(m.get(), (fs::path(c.out) / "model.json").string().c_str()));
    run.add_output("model.json");
    run.add_rate(rate);
    run.complete();
    std::cerr << "trained model: alphabet " << sdev_model_alphabet_size(m.get()) << ", D_max "
              << sdev_model_max_duration(m.get()) << "\n";
}

void cmd_evaluate(const RunConfig& c, unsigned reports) {
    const auto rates = parse_rates(c.rates);
    const auto opts = pipeline_options(c);
    if (c.jobs == 0) usage_error("--jobs must be at least 1");
    auto cohort = load(c);
    RunManifest run(c, c.out);
    sdev_evaluation* raw = nullptr;
    check(sdev_evaluation_create(cohort.get(), &opts, c.jobs, &raw));
    EvaluationPtr ev(raw);
    for (const char* f : {"folds.csv", "summary.csv", "trends.csv", "errors.csv"}) {
        const unsigned bit = std::string(f) == "folds.csv"     ? SDEV_REPORT_FOLDS
                             : std::string(f) == "summary.csv" ? SDEV_REPORT_SUMMARY
                             : std::string(f) == "trends.csv"  ? SDEV_REPORT_TRENDS
                                                               : SDEV_REPORT_ERRORS;
        if (reports & bit) run.add_output(f);
    }
    for (std::size_t i = 0; i < rates.size(); ++i) {
        check(sdev_evaluation_run_rate(ev.get(), rates[i]));
        check(sdev_evaluation_write(ev.get(), c.out.c_str(), reports));
        run.add_rate(rates[i]);
        double acc = 0;
        const bool has_acc = sdev_evaluation_metric_mean(ev.get(), i, SDEV_METRIC_ACCURACY, &acc) == SDEV_OK;
        std::cerr << "rate " << format_rate(rates[i]) << " Hz: mean accuracy "
                  << (has_acc ? std::to_string(acc) : std::string("undefined")) << "\n";
        if (c.stop_after_rates && i + 1 == c.stop_after_rates && i + 1 < rates.size())
            throw Failure{kExitRuntime, "stopped after " + std::to_string(i + 1) + " rate(s); outputs are partial"};
    }
    run.complete();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surgical deviation detection: alignment, standard process and HsMM evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sdev_version()));
    RunConfig cfg;

    auto add_pipeline = [&](CLI::App* sub, bool many_rates) {
        sub->add_option("--manifest", cfg.manifest, "Cohort manifest JSON");
        sub->add_option("--rates", cfg.rates, many_rates ? "Sampling rates, e.g. 2..12,12.5" : "Sampling rate")
            ->default_str(many_rates ? "2..12,12.5" : "8");
        sub->add_option("--dba-max-iter", cfg.dba_max_iter, "DBA iteration cap")->capture_default_str();
        sub->add_option("--dba-patience", cfg.dba_patience, "Non-improving DBA iterations before stopping")
            ->capture_default_str();
        sub->add_option("--dmax-factor", cfg.dmax_factor, "D_max as a multiple of the longest training run")
            ->capture_default_str();
        sub->add_option("--smoothing", cfg.smoothing, "Additive smoothing pseudo-count")->capture_default_str();
        sub->add_flag("--em", cfg.em, "Refine the counted model with Baum-Welch");
        sub->add_option("--em-max-iter", cfg.em_max_iter, "EM iteration cap")->capture_default_str();
        sub->add_option("--em-tol", cfg.em_tol, "EM log-likelihood tolerance")->capture_default_str();
        sub->add_option("--decode", cfg.decode, "viterbi or posterior")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "Recorded in the run manifest")->capture_default_str();
        sub->add_option("--config", cfg.config_path, "Replay the configuration of a run_manifest.json");
    };

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic cohort");
    sim->add_option("--seed", cfg.seed, "Generator seed")->capture_default_str();
    sim->add_option("--procedures", cfg.procedures, "Cohort size")->capture_default_str();
    sim->add_option("--perturbation-rate", cfg.perturbation_rate, "Per-step substitute/insert/delete probability");
    sim->add_option("--idle-gap-rate", cfg.idle_gap_rate, "Per-step probability of an idle pause");
    sim->add_option("--event-fraction", cfg.event_fraction, "Target share of event-deviation instants");
    sim->add_option("--config", cfg.config_path, "Replay the configuration of a run_manifest.json");

    auto* ing = app.add_subcommand("ingest", "Validate a cohort and write sampled sequences");
    ing->add_option("--manifest", cfg.manifest, "Cohort manifest JSON");
    ing->add_option("--rates", cfg.rates, "Sampling rates")->capture_default_str();
    ing->add_option("--config", cfg.config_path, "Replay the configuration of a run_manifest.json");

    auto* aln = app.add_subcommand("align", "Align a cohort and build its standard process");
    add_pipeline(aln, false);
    auto* trn = app.add_subcommand("train", "Train a detector on a whole cohort");
    add_pipeline(trn, false);
    auto* evl = app.add_subcommand("evaluate", "Leave-one-out evaluation over sampling rates");
    add_pipeline(evl, true);
    evl->add_option("--jobs", cfg.jobs, "Worker threads for folds")->capture_default_str();
    evl->add_option("--stop-after-rates", cfg.stop_after_rates)->group("");
    auto* err = app.add_subcommand("errors", "Categorise false event-deviation detections");
    add_pipeline(err, true);
    err->add_option("--jobs", cfg.jobs, "Worker threads for folds")->capture_default_str();

    for (auto* sub : {sim, ing, aln, trn, evl, err}) sub->add_option("--out", cfg.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        auto* sub = app.get_subcommands().front();
        cfg.subcommand = sub->get_name();
        const bool single = cfg.subcommand == "align" || cfg.subcommand == "train";
        if (single && sub->count("--rates") == 0) cfg.rates = "8";
        if (!cfg.config_path.empty()) apply_config_file(cfg);

        if (cfg.subcommand == "simulate")
            cmd_simulate(cfg);
        else if (cfg.subcommand == "ingest")
            cmd_ingest(cfg);
        else if (cfg.subcommand == "align")
            cmd_align(cfg);
        else if (cfg.subcommand == "train")
            cmd_train(cfg);
        else if (cfg.subcommand == "evaluate")
            cmd_evaluate(cfg, SDEV_REPORT_ALL);
        else
            cmd_evaluate(cfg, SDEV_REPORT_ERRORS);
    } catch (const Failure& f) {
        std::cerr << "sdev: " << f.message << "\n";
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "sdev: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
