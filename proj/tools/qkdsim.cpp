// Command-line driver: run protocol sessions, verify the Monte Carlo against
// the closed-form error rates, and sweep parameters into CSV reports.

#include <algorithm>
#include <charconv>
#include <clocale>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qkd/analysis.hpp"
#include "qkd/postprocessing.hpp"
#include "qkd/session.hpp"

namespace {

using qkd::AttackPolicy;
using qkd::SessionConfig;

constexpr std::uint64_t kReconcileStream = 0x5245434F4E43494CULL;
constexpr std::uint64_t kVerifyCellStream = 0x5645524946590000ULL;
constexpr std::uint64_t kDefaultSeed = 1;

std::string fmt(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::vector<double> parse_csv_doubles(const std::string& text,
                                      std::size_t expected,
                                      const std::string& flag) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw qkd::ConfigError(flag + ": cannot parse '" + item + "'");
        }
    }
    if (values.size() != expected)
        throw qkd::ConfigError(flag + ": expected " + std::to_string(expected) +
                               " comma-separated values");
    return values;
}

struct AttackTriple {
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    AttackPolicy to_policy() const {
        try {
            return {p1, p2, p3};
        } catch (const std::invalid_argument& e) {
            throw qkd::ConfigError(e.what());
        }
    }
};

// Raw knobs shared by the subcommands; flags override config-file values,
// which override the QKD_SEED environment fallback.
struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    std::optional<double> epsilon_flag;
    std::optional<double> alpha_sq_flag;
    std::optional<std::uint64_t> pairs_flag;
    std::optional<std::string> attack_flag;
    std::optional<double> e_max_flag;
    std::optional<std::string> samples_flag;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "JSON config file");
    cmd->add_option("--seed", opt.seed_flag, "master 64-bit seed");
    cmd->add_option("--epsilon", opt.epsilon_flag,
                    "diagonal-basis probability, in (0, 1]");
    cmd->add_option("--alpha-sq", opt.alpha_sq_flag,
                    "squared dominant source amplitude, in [0, 1]");
    cmd->add_option("--pairs", opt.pairs_flag, "number of photon pairs");
    cmd->add_option("--attack", opt.attack_flag,
                    "interception probabilities p1,p2,p3");
    cmd->add_option("--e-max", opt.e_max_flag,
                    "tolerated per-subset error rate, in (0, 1)");
    cmd->add_option("--samples", opt.samples_flag,
                    "test sample sizes m1,m1p,m2,m2p,m3,m3p");
}

std::optional<std::uint64_t> seed_from_env() {
    const char* text = std::getenv("QKD_SEED");
    if (text == nullptr || *text == '\0') return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const unsigned long long value = std::strtoull(text, &end, 10);
    if (errno != 0 || end == nullptr || *end != '\0')
        throw qkd::ConfigError("QKD_SEED: cannot parse '" + std::string(text) +
                               "'");
    return static_cast<std::uint64_t>(value);
}

// Applies the JSON config file, then flag overrides, onto `config`.
void resolve_config(const CommonOptions& opt, SessionConfig& config) {
    AttackTriple attack{config.attack.p1(), config.attack.p2(),
                        config.attack.p3()};
    bool config_had_seed = false;

    if (!opt.config_path.empty()) {
        std::ifstream file(opt.config_path);
        if (!file)
            throw qkd::ConfigError("config: cannot open " + opt.config_path);
        nlohmann::json j;
        try {
            file >> j;
        } catch (const nlohmann::json::exception& e) {
            throw qkd::ConfigError("config: " + std::string(e.what()));
        }
        try {
            for (const auto& [key, value] : j.items()) {
                if (key == "n_pairs") {
                    config.n_pairs = value.get<std::uint64_t>();
                } else if (key == "epsilon") {
                    config.epsilon = value.get<double>();
                } else if (key == "alpha_sq") {
                    config.alpha_sq = value.get<double>();
                } else if (key == "e_max") {
                    config.e_max = value.get<double>();
                } else if (key == "seed") {
                    config.seed = value.get<std::uint64_t>();
                    config_had_seed = true;
                } else if (key == "attack") {
                    attack.p1 = value.at("p1").get<double>();
                    attack.p2 = value.at("p2").get<double>();
                    attack.p3 = value.at("p3").get<double>();
                } else if (key == "m_samples") {
                    if (!value.is_array() || value.size() != qkd::kSubsetCount)
                        throw qkd::ConfigError(
                            "m_samples: expected an array of 6 sizes");
                    for (std::size_t i = 0; i < qkd::kSubsetCount; ++i)
                        config.m_samples[i] = value[i].get<std::uint64_t>();
                } else {
                    throw qkd::ConfigError("config: unknown field '" + key +
                                           "'");
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw qkd::ConfigError("config: " + std::string(e.what()));
        }
    }

    if (opt.epsilon_flag) config.epsilon = *opt.epsilon_flag;
    if (opt.alpha_sq_flag) config.alpha_sq = *opt.alpha_sq_flag;
    if (opt.pairs_flag) config.n_pairs = *opt.pairs_flag;
    if (opt.e_max_flag) config.e_max = *opt.e_max_flag;
    if (opt.attack_flag) {
        const auto p = parse_csv_doubles(*opt.attack_flag, 3, "--attack");
        attack = {p[0], p[1], p[2]};
    }
    if (opt.samples_flag) {
        const auto m = parse_csv_doubles(*opt.samples_flag, 6, "--samples");
        for (std::size_t i = 0; i < qkd::kSubsetCount; ++i) {
            if (m[i] < 0 || m[i] != static_cast<double>(
                                        static_cast<std::uint64_t>(m[i])))
                throw qkd::ConfigError("--samples: sizes must be integers");
            config.m_samples[i] = static_cast<std::uint64_t>(m[i]);
        }
    }
    config.attack = attack.to_policy();

    if (opt.seed_flag) {
        config.seed = *opt.seed_flag;
    } else if (!config_had_seed) {
        config.seed = seed_from_env().value_or(kDefaultSeed);
    }
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    CommonOptions common;
    std::string records_out;
    std::string report_out = "qkd_report.json";
    std::string key_out = "qkd_key.hex";
    std::uint64_t key_bits = 2048;  // 0 = process the whole remaining key
    unsigned rounds = 4;
    std::size_t block_size = 64;
    std::uint64_t safety_margin = 16;
};

SessionConfig default_run_config() {
    SessionConfig config;
    config.n_pairs = 1'000'000;
    config.epsilon = 0.1;
    config.alpha_sq = 0.8;
    config.attack = AttackPolicy::passive();
    config.m_samples = {5000, 5000, 500, 500, 500, 500};
    config.e_max = 0.05;
    config.seed = kDefaultSeed;
    return config;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw qkd::ConfigError("cannot open output file " + path);
    file << body;
}

int cmd_run(const RunOptions& opt) {
    SessionConfig config = default_run_config();
    resolve_config(opt.common, config);
    config.validate();

    const qkd::SessionResult session = qkd::run_session(config);

    if (!opt.records_out.empty()) {
        std::ofstream file(opt.records_out, std::ios::binary);
        if (!file)
            throw qkd::ConfigError("cannot open output file " +
                                   opt.records_out);
        qkd::write_records_csv(file, session.records);
    }

    qkd::Rng sample_rng(config.seed, qkd::kSampleStream);
    const qkd::EstimateOutcome estimate =
        qkd::estimate_errors(session.records, config.m_samples, config.epsilon,
                             config.e_max, sample_rng);
    const qkd::ErrorReport& report = estimate.report;
    write_text_file(opt.report_out, qkd::report_json(report));

    const std::uint64_t keep =
        opt.key_bits == 0
            ? estimate.alice_key.size()
            : std::min<std::uint64_t>(opt.key_bits, estimate.alice_key.size());
    qkd::SiftedKey alice{
        {estimate.alice_key.begin(), estimate.alice_key.begin() + keep},
        qkd::Party::Alice};
    qkd::SiftedKey bob{
        {estimate.bob_key.begin(), estimate.bob_key.begin() + keep},
        qkd::Party::Bob};
    qkd::Rng reconcile_rng(config.seed, kReconcileStream);
    const qkd::ReconcileResult reconciled =
        qkd::reconcile(alice, bob, opt.rounds, opt.block_size, reconcile_rng);

    std::string key_hex;
    std::uint64_t final_bits = 0;
    std::string key_note;
    try {
        const qkd::FinalKey final_key =
            qkd::privacy_amplify(reconciled.key_a, reconciled.leaked,
                                 opt.safety_margin, config.seed);
        key_hex = qkd::bits_to_hex(final_key.bits);
        final_bits = final_key.bits.size();
    } catch (const qkd::KeyTooShort& e) {
        key_note = e.what();
    }
    write_text_file(opt.key_out, key_hex + "\n");

    std::cout << "pairs: " << config.n_pairs << "\n"
              << "sifted: " << session.sifted_count << " (fraction "
              << fmt(static_cast<double>(session.sifted_count) /
                     static_cast<double>(config.n_pairs))
              << ")\n";
    std::cout << "subset rates:";
    for (qkd::SubsetLabel label : qkd::kSubsetOrder) {
        const auto& e = report.subsets[qkd::subset_index(label)];
        std::cout << ' ' << qkd::to_token(label) << '=' << fmt(e.rate);
    }
    std::cout << "\naverage error: " << fmt(report.average_error)
              << " -> naive " << (report.naive_accept ? "accept" : "abort")
              << "\n"
              << "refined decision: "
              << (report.refined_accept ? "accept" : "abort") << "\n"
              << "reconciliation: " << keep << " bits in, " << reconciled.leaked
              << " parity bits disclosed\n";
    if (key_note.empty())
        std::cout << "final key: " << final_bits << " bits -> " << opt.key_out
                  << "\n";
    else
        std::cout << "final key: none (" << key_note << ")\n";
    std::cout << "report: " << opt.report_out << "\n";

    return report.refined_accept ? 0 : 2;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
    CommonOptions common;
    double z_max = 4.0;
    std::string out;
};

SessionConfig default_verify_config() {
    SessionConfig config;
    config.n_pairs = 1'000'000;
    config.epsilon = 0.3;
    config.alpha_sq = 0.8;
    config.attack = AttackPolicy::passive();
    config.m_samples = {20000, 20000, 5000, 5000, 5000, 5000};
    config.e_max = 0.05;
    config.seed = kDefaultSeed;
    return config;
}

int cmd_verify(const VerifyOptions& opt) {
    SessionConfig base = default_verify_config();
    resolve_config(opt.common, base);

    std::vector<double> alpha_grid = {0.5, 0.6, 0.8, 0.95};
    if (opt.common.alpha_sq_flag) alpha_grid = {*opt.common.alpha_sq_flag};
    std::vector<AttackPolicy> policies = {
        {1.0, 0.0, 0.0},
        {0.0, 1.0, 0.0},
        {0.0, 0.0, 1.0},
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
    };
    if (opt.common.attack_flag) policies = {base.attack};

    std::ostringstream csv;
    csv << "alpha_sq,p1,p2,p3";
    for (qkd::SubsetLabel label : qkd::kSubsetOrder) {
        const auto token = qkd::to_token(label);
        csv << ',' << token << "_pred," << token << "_emp," << token << "_z";
    }
    csv << ",avg_pred,avg_emp,avg_z,refined_decision,naive_decision,status\n";

    bool all_pass = true;
    std::size_t cell_index = 0;
    for (double alpha_sq : alpha_grid) {
        for (const AttackPolicy& policy : policies) {
            SessionConfig config = base;
            config.alpha_sq = alpha_sq;
            config.attack = policy;
            config.seed =
                qkd::Rng(base.seed, kVerifyCellStream + cell_index).next_u64();
            ++cell_index;

            const qkd::VerifyCell cell = qkd::run_verify_cell(config, opt.z_max);
            all_pass = all_pass && cell.pass;

            double max_z = std::abs(cell.z_average);
            for (double z : cell.z) max_z = std::max(max_z, std::abs(z));
            std::cout << "alpha_sq=" << fmt(alpha_sq) << " attack="
                      << fmt(policy.p1()) << ',' << fmt(policy.p2()) << ','
                      << fmt(policy.p3()) << " max|z|=" << fmt(max_z) << " "
                      << (cell.pass ? "PASS" : "FAIL");
            if (!cell.pass && !cell.failure.empty())
                std::cout << " (" << cell.failure << ")";
            std::cout << "\n";

            csv << fmt(alpha_sq) << ',' << fmt(policy.p1()) << ','
                << fmt(policy.p2()) << ',' << fmt(policy.p3());
            const auto predicted = cell.predicted.as_array();
            for (std::size_t s = 0; s < qkd::kSubsetCount; ++s)
                csv << ',' << fmt(predicted[s]) << ',' << fmt(cell.empirical[s])
                    << ',' << fmt(cell.z[s]);
            csv << ',' << fmt(cell.predicted_average) << ','
                << fmt(cell.empirical_average) << ',' << fmt(cell.z_average);
            if (cell.report) {
                csv << ','
                    << (cell.report->refined_accept ? "accept" : "abort") << ','
                    << (cell.report->naive_accept ? "accept" : "abort");
            } else {
                csv << ",,";
            }
            csv << ',' << (cell.pass ? "pass" : "fail") << '\n';
        }
    }

    if (!opt.out.empty()) write_text_file(opt.out, csv.str());
    std::cout << (all_pass ? "all cells consistent with the closed forms"
                           : "some cells failed")
              << "\n";
    return all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
    CommonOptions common;
    std::string param = "epsilon";
    double from = 0.05;
    double to = 1.0;
    std::uint64_t steps = 20;
    std::string out;
};

int cmd_sweep(const SweepOptions& opt) {
    SessionConfig base = default_run_config();
    resolve_config(opt.common, base);

    if (opt.steps < 1) {
        std::cerr << "error: --steps must be at least 1\n";
        return 1;
    }

    const std::uint64_t m_required =
        std::max({base.m_samples[2], base.m_samples[3], base.m_samples[4],
                  base.m_samples[5]});

    std::ostringstream csv;
    csv << "param,value,sifted_fraction,avg_error,e1,e1p,e2,e2p,e3,e3p,"
           "min_epsilon,feasible\n";

    const std::string param_token =
        opt.param == "alpha-sq" ? "alpha_sq" : opt.param;
    for (std::uint64_t i = 0; i < opt.steps; ++i) {
        const double t =
            opt.steps == 1
                ? 0.0
                : static_cast<double>(i) / static_cast<double>(opt.steps - 1);
        const double value = opt.from + (opt.to - opt.from) * t;

        double epsilon = base.epsilon;
        double alpha_sq = base.alpha_sq;
        std::uint64_t pairs = base.n_pairs;
        std::string value_text;
        if (opt.param == "epsilon") {
            epsilon = value;
            value_text = fmt(value);
        } else if (opt.param == "alpha-sq") {
            alpha_sq = value;
            value_text = fmt(value);
        } else {  // pairs
            pairs = static_cast<std::uint64_t>(value < 1.0 ? 1.0 : value + 0.5);
            value_text = std::to_string(pairs);
        }
        if (!(epsilon > 0.0 && epsilon <= 1.0))
            throw qkd::ConfigError("sweep: epsilon value " + fmt(epsilon) +
                                   " outside (0, 1]");

        const qkd::Amplitudes amps = qkd::Amplitudes::from_alpha_sq(alpha_sq);
        const qkd::PredictedRates rates = qkd::predict_rates(amps, base.attack);
        const double average = qkd::predict_average(amps, base.attack, epsilon);
        const qkd::EpsilonBound bound =
            qkd::epsilon_lower_bound(pairs, m_required);

        csv << param_token << ',' << value_text << ','
            << fmt(qkd::sifted_fraction(epsilon)) << ',' << fmt(average) << ','
            << fmt(rates.e1) << ',' << fmt(rates.e1p) << ',' << fmt(rates.e2)
            << ',' << fmt(rates.e2p) << ',' << fmt(rates.e3) << ','
            << fmt(rates.e3p) << ',' << fmt(bound.value) << ','
            << (bound.feasible ? '1' : '0') << '\n';
    }

    if (opt.out.empty())
        std::cout << csv.str();
    else
        write_text_file(opt.out, csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_NUMERIC, "C");

    CLI::App app{
        "Simulator and analysis toolkit for a biased-basis entanglement QKD "
        "protocol"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand(
        "run", "run one session end to end and write its reports");
    add_common_flags(run, run_opt.common);
    run->add_option("--records-out", run_opt.records_out,
                    "write the per-trial records CSV here");
    run->add_option("--report-out", run_opt.report_out,
                    "error report JSON path");
    run->add_option("--key-out", run_opt.key_out, "final key hex path");
    run->add_option("--key-bits", run_opt.key_bits,
                    "sifted bits fed into postprocessing (0 = all)");
    run->add_option("--rounds", run_opt.rounds, "reconciliation rounds");
    run->add_option("--block-size", run_opt.block_size,
                    "reconciliation block size");
    run->add_option("--safety-margin", run_opt.safety_margin,
                    "extra bits removed by privacy amplification");

    VerifyOptions verify_opt;
    CLI::App* verify = app.add_subcommand(
        "verify", "compare Monte Carlo subset rates with the closed forms");
    add_common_flags(verify, verify_opt.common);
    verify->add_option("--z-max", verify_opt.z_max,
                       "binomial z-score acceptance bound");
    verify->add_option("--out", verify_opt.out, "per-cell CSV path");

    SweepOptions sweep_opt;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "tabulate the analytic curves over one varied parameter");
    add_common_flags(sweep, sweep_opt.common);
    sweep->add_option("--param", sweep_opt.param, "parameter to vary")
        ->check(CLI::IsMember({"epsilon", "alpha-sq", "pairs"}));
    sweep->add_option("--from", sweep_opt.from, "range start");
    sweep->add_option("--to", sweep_opt.to, "range end");
    sweep->add_option("--steps", sweep_opt.steps, "number of grid points");
    sweep->add_option("--out", sweep_opt.out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (verify->parsed()) return cmd_verify(verify_opt);
        if (sweep->parsed()) return cmd_sweep(sweep_opt);
    } catch (const qkd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const qkd::InsufficientSamples& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
