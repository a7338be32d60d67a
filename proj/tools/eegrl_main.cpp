#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eegrl/config.hpp"
#include "eegrl/eval.hpp"
#include "eegrl/model.hpp"
#include "eegrl/preproc.hpp"
#include "eegrl/session.hpp"
#include "eegrl/trainer.hpp"

namespace {

using namespace eegrl;

std::vector<PreppedSession> preprocess_dirs(const std::vector<std::string>& dirs,
                                            const PreprocConfig& pc) {
    std::vector<PreppedSession> out;
    out.reserve(dirs.size());
    for (const auto& d : dirs) out.push_back(preprocess_session(load_session(d), pc));
    return out;
}

void save_params_snapshot(const QNetwork& reference, const std::vector<Tensor>& values,
                          const std::string& prefix) {
    QNetwork copy(reference.config());
    auto params = copy.params();
    if (params.size() != values.size()) throw std::logic_error("snapshot size mismatch");
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
    save_network(copy, prefix);
}

// flag values land here; count() decides whether they override the config file
struct Flags {
    uint64_t seed = 0;
    double duration_s = 0.0;
    std::string subject;
    std::string out;
    std::vector<std::string> train_dirs;
    std::string val_dir;
    std::string variant = "dueling";
    double beta = 0.0;
    int episodes = 0;
    int batch = 0;
    double lr = 0.0;
    int iterations = 0;
    std::string model;
    std::string session_dir;
    std::string mode = "rl";
    std::string report;
    std::string csv;
    double initial_trt = 0.0;
    std::vector<double> beta_values{0.2, 0.4, 0.6, 0.75, 0.8};
    std::string test_dir;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"session-level EEG reaction-time estimation (deep Q-learning pipeline)"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration (explicit flags win)");

    Flags fl;

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic session directory");
    synth->add_option("--seed", fl.seed, "generator seed");
    synth->add_option("--duration-s", fl.duration_s, "session length in seconds")
        ->check(CLI::PositiveNumber);
    synth->add_option("--subject", fl.subject, "subject tag");
    synth->add_option("--out", fl.out, "output session directory")->required();

    auto* trl = app.add_subcommand("train-rl", "train a DQN variant on session data");
    trl->add_option("--train", fl.train_dirs, "training session directories")
        ->required()
        ->expected(-1);
    trl->add_option("--val", fl.val_dir, "validation session directory");
    trl->add_option("--out", fl.out, "checkpoint path prefix")->required();
    trl->add_option("--variant", fl.variant, "dueling|double|dqn")
        ->check(CLI::IsMember({"dueling", "double", "dqn"}));
    trl->add_option("--beta", fl.beta, "transition weight");
    trl->add_option("--episodes", fl.episodes, "training episodes");
    trl->add_option("--seed", fl.seed, "training seed");
    trl->add_option("--batch", fl.batch, "batch size");
    trl->add_option("--lr", fl.lr, "learning rate");

    auto* tsl = app.add_subcommand("train-sl", "train the supervised baseline");
    tsl->add_option("--train", fl.train_dirs, "training session directories")
        ->required()
        ->expected(-1);
    tsl->add_option("--val", fl.val_dir, "validation session directory");
    tsl->add_option("--out", fl.out, "checkpoint path prefix")->required();
    tsl->add_option("--iterations", fl.iterations, "gradient steps");
    tsl->add_option("--lr", fl.lr, "learning rate");
    tsl->add_option("--seed", fl.seed, "training seed");
    tsl->add_option("--batch", fl.batch, "batch size");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a session");
    ev->add_option("--model", fl.model, "checkpoint path prefix")->required();
    ev->add_option("--session", fl.session_dir, "session directory")->required();
    ev->add_option("--mode", fl.mode, "rl|sl")->check(CLI::IsMember({"rl", "sl"}));
    ev->add_option("--report", fl.report, "output report JSON")->required();
    ev->add_option("--csv", fl.csv, "output per-segment CSV");
    ev->add_option("--beta", fl.beta, "transition weight for rl rollouts");
    ev->add_option("--initial-trt", fl.initial_trt, "tracer start value");

    auto* sw = app.add_subcommand("sweep-beta", "train and evaluate across transition weights");
    sw->add_option("--values", fl.beta_values, "transition weights to sweep");
    sw->add_option("--train", fl.train_dirs, "training session directories")
        ->required()
        ->expected(-1);
    sw->add_option("--test", fl.test_dir, "test session directory")->required();
    sw->add_option("--val", fl.val_dir, "validation session directory");
    sw->add_option("--out", fl.out, "output table CSV");
    sw->add_option("--variant", fl.variant, "dueling|double|dqn")
        ->check(CLI::IsMember({"dueling", "double", "dqn"}));
    sw->add_option("--episodes", fl.episodes, "training episodes per weight");
    sw->add_option("--seed", fl.seed, "training seed");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_run_config(config_path);

        if (synth->parsed()) {
            SynthConfig sc = cfg.synth;
            if (synth->count("--seed")) sc.seed = fl.seed;
            if (synth->count("--duration-s")) sc.duration_s = fl.duration_s;
            if (synth->count("--subject")) sc.subject_id = fl.subject;
            auto [session, latent] = generate_session(sc);
            save_session(session, fl.out, &latent);
            std::cout << "wrote session '" << session.subject_id << "' (" << session.duration_s
                      << " s, " << session.events.size() << " trials) to " << fl.out << "\n";
            return 0;
        }

        if (trl->parsed()) {
            RlTrainConfig& rl = cfg.rl;
            if (trl->count("--beta")) rl.beta = fl.beta;
            if (trl->count("--episodes")) rl.episodes = fl.episodes;
            if (trl->count("--seed")) rl.seed = fl.seed;
            if (trl->count("--batch")) rl.batch_size = fl.batch;
            if (trl->count("--lr")) rl.learning_rate = fl.lr;
            validate_run_config(cfg);

            const auto prepped = preprocess_dirs(fl.train_dirs, cfg.preproc);
            std::vector<const std::vector<SegmentState>*> train_sessions;
            for (const auto& p : prepped) train_sessions.push_back(&p.segments);
            std::unique_ptr<PreppedSession> val;
            if (!fl.val_dir.empty())
                val = std::make_unique<PreppedSession>(
                    preprocess_session(load_session(fl.val_dir), cfg.preproc));

            NetworkConfig nc;
            nc.variant = variant_from_name(fl.variant);
            nc.n_actions = cfg.actions.size();
            QNetwork online(nc);
            RlTrainResult result = train_rl(train_sessions, val ? &val->segments : nullptr,
                                            cfg.actions, rl, online);

            save_network(online, fl.out);
            write_train_log_csv(result.log, fl.out + ".trainlog.csv");
            std::vector<std::pair<std::string, std::string>> extra{
                {"variant", "\"" + fl.variant + "\""},
                {"beta", std::to_string(rl.beta)},
                {"seed", std::to_string(rl.seed)}};
            if (result.has_best) {
                save_params_snapshot(online, result.best_params, fl.out + ".best");
                extra.emplace_back("best_episode", std::to_string(result.best_episode));
                extra.emplace_back("best_val_correlation",
                                   std::to_string(result.best_val_correlation));
            }
            write_train_log_summary(result.log, fl.out + ".summary.json", extra);
            std::cout << "trained " << fl.variant << " for " << rl.episodes
                      << " episodes; final avg return "
                      << (result.log.avg_return.empty() ? 0.0 : result.log.avg_return.back())
                      << "\n";
            return 0;
        }

        if (tsl->parsed()) {
            SlTrainConfig& sl = cfg.sl;
            if (tsl->count("--iterations")) sl.iterations = fl.iterations;
            if (tsl->count("--lr")) sl.learning_rate = fl.lr;
            if (tsl->count("--seed")) sl.seed = fl.seed;
            if (tsl->count("--batch")) sl.batch_size = fl.batch;
            validate_run_config(cfg);

            const auto prepped = preprocess_dirs(fl.train_dirs, cfg.preproc);
            std::vector<TrialSample> trials;
            for (const auto& p : prepped)
                trials.insert(trials.end(), p.sl_trials.begin(), p.sl_trials.end());

            NetworkConfig nc;
            nc.variant = Variant::Supervised;
            QNetwork net(nc);
            TrainLog log = train_supervised(trials, sl, net);

            save_network(net, fl.out);
            std::ofstream lf(fl.out + ".losslog.csv", std::ios::trunc);
            lf << "iteration,loss\n";
            for (size_t i = 0; i < log.step_loss.size(); ++i)
                lf << (i + 1) << "," << log.step_loss[i] << "\n";
            write_train_log_summary(log, fl.out + ".summary.json",
                                    {{"variant", "\"supervised\""},
                                     {"trials", std::to_string(trials.size())},
                                     {"seed", std::to_string(sl.seed)}});
            std::cout << "trained supervised baseline on " << trials.size() << " trials\n";
            return 0;
        }

        if (ev->parsed()) {
            double beta = cfg.rl.beta;
            double initial_trt = cfg.rl.initial_trt;
            if (ev->count("--beta")) beta = fl.beta;
            if (ev->count("--initial-trt")) initial_trt = fl.initial_trt;
            validate_run_config(cfg);

            QNetwork net = load_network(fl.model);
            PreppedSession prep =
                preprocess_session(load_session(fl.session_dir), cfg.preproc);
            EvalReport report =
                evaluate(net, prep.segments, fl.mode, cfg.actions, beta, initial_trt);
            write_report_json(report, fl.report);
            if (!fl.csv.empty()) write_report_csv(report, fl.csv);

            std::cout << "mode " << fl.mode << "  rmse "
                      << (report.rmse_s ? std::to_string(*report.rmse_s) : "n/a")
                      << "  correlation "
                      << (report.correlation ? std::to_string(*report.correlation) : "n/a")
                      << "\n";
            return 0;
        }

        if (sw->parsed()) {
            RlTrainConfig rl = cfg.rl;
            if (sw->count("--episodes")) rl.episodes = fl.episodes;
            if (sw->count("--seed")) rl.seed = fl.seed;
            validate_run_config(cfg);
            if (fl.out.empty()) fl.out = "beta_sweep.csv";

            const auto prepped = preprocess_dirs(fl.train_dirs, cfg.preproc);
            std::vector<const std::vector<SegmentState>*> train_sessions;
            for (const auto& p : prepped) train_sessions.push_back(&p.segments);
            PreppedSession test = preprocess_session(load_session(fl.test_dir), cfg.preproc);
            std::unique_ptr<PreppedSession> val;
            if (!fl.val_dir.empty())
                val = std::make_unique<PreppedSession>(
                    preprocess_session(load_session(fl.val_dir), cfg.preproc));

            NetworkConfig nc;
            nc.variant = variant_from_name(fl.variant);
            nc.n_actions = cfg.actions.size();

            std::ofstream f(fl.out, std::ios::trunc);
            if (!f) throw std::runtime_error("sweep-beta: cannot write " + fl.out);
            f << "beta,rmse,correlation\n";
            std::printf("%8s %12s %12s\n", "beta", "rmse", "correlation");
            for (double beta : fl.beta_values) {
                RlTrainConfig run = rl;
                run.beta = beta;
                QNetwork online(nc);
                RlTrainResult result = train_rl(train_sessions, val ? &val->segments : nullptr,
                                                cfg.actions, run, online);
                if (result.has_best) {
                    auto params = online.params();
                    for (size_t i = 0; i < params.size(); ++i)
                        params[i]->value = result.best_params[i];
                }
                EvalReport rep =
                    evaluate(online, test.segments, "rl", cfg.actions, beta, run.initial_trt);
                f << beta << ",";
                if (rep.rmse_s) f << *rep.rmse_s;
                f << ",";
                if (rep.correlation) f << *rep.correlation;
                f << "\n";
                f.flush();
                std::printf("%8.3g %12s %12s\n", beta,
                            rep.rmse_s ? std::to_string(*rep.rmse_s).c_str() : "n/a",
                            rep.correlation ? std::to_string(*rep.correlation).c_str() : "n/a");
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
