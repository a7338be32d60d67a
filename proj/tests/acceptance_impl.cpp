#include "acceptance_criteria.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eegrl/autodiff.hpp"
#include "eegrl/checkpoint.hpp"
#include "eegrl/env.hpp"
#include "eegrl/eval.hpp"
#include "eegrl/model.hpp"
#include "eegrl/optimizer.hpp"
#include "eegrl/replay.hpp"
#include "eegrl/signal.hpp"
#include "gradcheck.hpp"
#include "testutil.hpp"

namespace acceptance {

namespace {

using namespace eegrl;
using clk = std::chrono::steady_clock;

// desk-scale study configuration (referenced by criteria 9-11). The paper's
// protocol picks the stopping point by validation, so the study trains with
// a validation session and evaluates the best-validation parameters.
constexpr double kStudyDuration = 600.0;
constexpr uint64_t kStudySeeds[3] = {1, 2, 3};
constexpr int kStudyEpisodes = 24;
constexpr double kStudyGamma = 0.5;
constexpr double kStudyLr = 1e-3;
constexpr int kStudyValInterval = 2;
constexpr uint64_t kStudyTrainSeed = 20;
constexpr int kSweepEpisodes = 12;
constexpr int kContrivedSegments = 10;
constexpr int kContrivedEpisodes = 120;
constexpr uint64_t kContrivedSeed = 17;
constexpr int kPrefixEpisodes = 8;

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

bool expect(bool cond, const std::string& what, std::string& detail) {
    if (!cond && detail.empty()) detail = what;
    return cond;
}

SynthConfig study_synth(uint64_t seed) {
    SynthConfig sc;
    sc.duration_s = kStudyDuration;
    sc.seed = seed;
    return sc;
}

std::vector<double> latent_at_segments(const LatentTrace& tr, size_t n_segs) {
    std::vector<double> out(n_segs);
    for (size_t i = 0; i < n_segs; ++i) {
        const double t = 3.0 * static_cast<double>(i) + 1.5;
        const size_t k = std::min(tr.latent_rt.size() - 2, static_cast<size_t>(t));
        const double f = t - static_cast<double>(k);
        out[i] = (1.0 - f) * tr.latent_rt[k] + f * tr.latent_rt[k + 1];
    }
    return out;
}

std::vector<SegmentState> contrived_segments() {
    Rng rng(909);
    auto segs = testutil::make_segments(kContrivedSegments, 30, 128, rng, 2.0);
    return segs;
}

RlTrainConfig contrived_config() {
    RlTrainConfig rl;
    rl.episodes = kContrivedEpisodes;
    rl.beta = 0.0;
    rl.seed = kContrivedSeed;
    return rl;
}

// ---- criterion 1: gradient suite ------------------------------------------

bool run_gradients(Context&, std::string& detail) {
    const auto t0 = clk::now();
    Rng rng(1001);
    double worst = 0.0;
    const auto track = [&](const char* label, double err) {
        if (err > worst) worst = err;
        if (err >= 1e-4 && detail.empty())
            detail = std::string(label) + " gradient error " + fmt(err);
    };

    const auto scalarize = [](Tape& t, Node* x) {
        Tensor zero(x->v().shape, 0.0);
        return t.squared_error(x, zero);
    };

    // conv2d, both paddings
    for (Padding pad : {Padding::Same, Padding::Valid}) {
        Parameter in("in", testutil::random_tensor({2, 4, 6}, rng));
        Parameter k("k", testutil::random_tensor({3, 2, 2, 3}, rng));
        gradcheck::Check chk;
        chk.params = {&in, &k};
        chk.forward = [&] {
            Tape t(false);
            return scalarize(t, t.conv2d(t.param(in), t.param(k), nullptr, pad))->v()[0];
        };
        chk.compute_grads = [&] {
            in.zero_grad();
            k.zero_grad();
            Tape t(true);
            t.backward(scalarize(t, t.conv2d(t.param(in), t.param(k), nullptr, pad)));
            t.merge_param_grads();
        };
        track("conv2d", chk.max_rel_err());
    }

    // depthwise with tanh
    {
        Parameter in("in", testutil::random_tensor({3, 5, 7}, rng, 0.5));
        Parameter k("k", testutil::random_tensor({3, 3, 2}, rng, 0.5));
        gradcheck::Check chk;
        chk.params = {&in, &k};
        chk.forward = [&] {
            Tape t(false);
            return scalarize(t, depthwise_conv2d(t, t.param(in), t.param(k), Padding::Valid))
                ->v()[0];
        };
        chk.compute_grads = [&] {
            in.zero_grad();
            k.zero_grad();
            Tape t(true);
            t.backward(
                scalarize(t, depthwise_conv2d(t, t.param(in), t.param(k), Padding::Valid)));
            t.merge_param_grads();
        };
        track("depthwise", chk.max_rel_err());
    }

    // separable
    {
        Parameter in("in", testutil::random_tensor({3, 2, 8}, rng, 0.5));
        Parameter dk("dk", testutil::random_tensor({3, 1, 3}, rng, 0.5));
        Parameter pk("pk", testutil::random_tensor({4, 3, 1, 1}, rng, 0.5));
        gradcheck::Check chk;
        chk.params = {&in, &dk, &pk};
        chk.forward = [&] {
            Tape t(false);
            return scalarize(t,
                             separable_conv2d(t, t.param(in), t.param(dk), t.param(pk)))
                ->v()[0];
        };
        chk.compute_grads = [&] {
            for (auto* p : chk.params) p->zero_grad();
            Tape t(true);
            t.backward(
                scalarize(t, separable_conv2d(t, t.param(in), t.param(dk), t.param(pk))));
            t.merge_param_grads();
        };
        track("separable", chk.max_rel_err());
    }

    // avgpool
    {
        Parameter in("in", testutil::random_tensor({2, 5, 7}, rng));
        gradcheck::Check chk;
        chk.params = {&in};
        chk.forward = [&] {
            Tape t(false);
            return scalarize(t, t.avgpool2x2(t.param(in)))->v()[0];
        };
        chk.compute_grads = [&] {
            in.zero_grad();
            Tape t(true);
            t.backward(scalarize(t, t.avgpool2x2(t.param(in))));
            t.merge_param_grads();
        };
        track("avgpool", chk.max_rel_err());
    }

    // linear
    {
        Parameter x("x", testutil::random_tensor({9}, rng));
        Parameter w("w", testutil::random_tensor({5, 9}, rng));
        Parameter b("b", testutil::random_tensor({5}, rng));
        gradcheck::Check chk;
        chk.params = {&x, &w, &b};
        chk.forward = [&] {
            Tape t(false);
            return scalarize(t, t.linear(t.param(x), t.param(w), t.param(b)))->v()[0];
        };
        chk.compute_grads = [&] {
            for (auto* p : chk.params) p->zero_grad();
            Tape t(true);
            t.backward(scalarize(t, t.linear(t.param(x), t.param(w), t.param(b))));
            t.merge_param_grads();
        };
        track("linear", chk.max_rel_err());
    }

    // conv-LSTM step
    {
        const int ch = 4, w = 6;
        Parameter px("x", testutil::random_tensor({ch, 1, w}, rng, 0.5));
        Parameter ph("h", testutil::random_tensor({ch, 1, w}, rng, 0.5));
        Parameter pc("c", testutil::random_tensor({ch, 1, w}, rng, 0.5));
        Parameter pk("k", testutil::random_tensor({4 * ch, 2 * ch, 1, 3}, rng, 0.3));
        Parameter pb("b", testutil::random_tensor({4 * ch}, rng, 0.3));
        const auto build = [&](Tape& t) {
            LstmState st{t.param(ph), t.param(pc)};
            auto next = conv_lstm_step(t, t.param(px), st, t.param(pk), t.param(pb));
            Tensor zh(next.h->v().shape, 0.0), zc(next.c->v().shape, 0.0);
            return t.add(t.squared_error(next.h, zh), t.squared_error(next.c, zc));
        };
        gradcheck::Check chk;
        chk.params = {&px, &ph, &pc, &pk, &pb};
        chk.forward = [&] {
            Tape t(false);
            return build(t)->v()[0];
        };
        chk.compute_grads = [&] {
            for (auto* p : chk.params) p->zero_grad();
            Tape t(true);
            t.backward(build(t));
            t.merge_param_grads();
        };
        track("conv_lstm_step", chk.max_rel_err());
    }

    // squared-error loss
    {
        Parameter pred("pred", testutil::random_tensor({6}, rng));
        Tensor target = testutil::random_tensor({6}, rng);
        gradcheck::Check chk;
        chk.params = {&pred};
        chk.step = 1e-6;
        chk.forward = [&] {
            Tape t(false);
            return t.squared_error(t.param(pred), target)->v()[0];
        };
        chk.compute_grads = [&] {
            pred.zero_grad();
            Tape t(true);
            t.backward(t.squared_error(t.param(pred), target));
            t.merge_param_grads();
        };
        track("squared_error", chk.max_rel_err());
    }

    // full backbone at the paper configuration, sampled probes
    {
        NetworkConfig cfg;
        cfg.variant = Variant::Supervised;
        QNetwork net(cfg);
        Rng init_rng(77);
        net.init(init_rng);
        std::array<Tensor, 3> planes{testutil::random_tensor({1, 30, 128}, rng, 0.5),
                                     testutil::random_tensor({1, 30, 128}, rng, 0.5),
                                     testutil::random_tensor({1, 30, 128}, rng, 0.5)};
        gradcheck::Check chk;
        chk.params = net.params();
        chk.forward = [&] {
            Tape t(false);
            return net.predict_raw(t, net.features(t, planes))->v()[0];
        };
        chk.compute_grads = [&] {
            for (auto* p : net.params()) p->zero_grad();
            Tape t(true);
            t.backward(net.predict_raw(t, net.features(t, planes)));
            t.merge_param_grads();
        };
        chk.probes_per_param = 10;
        Rng probe(78);
        track("full backbone", chk.max_rel_err(&probe));
    }

    const double secs = seconds_since(t0);
    bool ok = detail.empty();
    ok = expect(secs < 120.0, "gradient suite exceeded 2 minutes: " + fmt(secs) + " s",
                detail) && ok;
    if (ok) detail = "max rel err " + fmt(worst) + ", " + fmt(secs) + " s";
    return ok;
}

// ---- criterion 2: shape suite ----------------------------------------------

bool run_shapes(Context&, std::string& detail) {
    Rng rng(1002);
    bool ok = true;
    for (Variant v : {Variant::Supervised, Variant::Dqn, Variant::Double, Variant::Dueling}) {
        NetworkConfig cfg;
        cfg.variant = v;
        QNetwork net(cfg);
        net.init(rng);
        Parameter* conv1 = nullptr;
        Parameter* dw = nullptr;
        Parameter* sd = nullptr;
        Parameter* sp = nullptr;
        for (Parameter* p : net.params()) {
            if (p->name == "conv1.kernel") conv1 = p;
            if (p->name == "depthwise.kernel") dw = p;
            if (p->name == "separable.depth") sd = p;
            if (p->name == "separable.point") sp = p;
        }
        auto plane = testutil::random_tensor({1, 30, 128}, rng, 0.5);
        Tape t(false);
        Node* x = t.conv2d(t.external(plane), t.param(*conv1), nullptr, Padding::Same);
        ok = expect(x->v().shape == std::vector<int>{32, 30, 128}, "conv1 shape", detail) && ok;
        x = depthwise_conv2d(t, x, t.param(*dw), Padding::Valid);
        ok = expect(x->v().shape == std::vector<int>{32, 1, 128}, "depthwise shape", detail) && ok;
        x = t.avgpool2x2(x);
        ok = expect(x->v().shape == std::vector<int>{32, 1, 64}, "pool1 shape", detail) && ok;
        x = separable_conv2d(t, x, t.param(*sd), t.param(*sp));
        ok = expect(x->v().shape == std::vector<int>{32, 1, 64}, "separable shape", detail) && ok;
        x = t.avgpool2x2(x);
        ok = expect(x->v().shape == std::vector<int>{32, 1, 32}, "pool2 shape", detail) && ok;

        std::array<Tensor, 3> planes{plane, plane, plane};
        Tape t2(false);
        Node* feat = net.features(t2, planes);
        ok = expect(feat->v().shape == std::vector<int>{1024}, "feature extent", detail) && ok;

        Tape t3(false);
        Node* feat3 = net.features(t3, planes);
        switch (v) {
            case Variant::Supervised: {
                Node* y = net.predict_raw(t3, feat3);
                ok = expect(y->v().shape == std::vector<int>{1}, "supervised head", detail) && ok;
                break;
            }
            case Variant::Dqn:
            case Variant::Double: {
                Node* q = net.q_values(t3, feat3);
                ok = expect(q->v().shape == std::vector<int>{16}, "q head", detail) && ok;
                break;
            }
            case Variant::Dueling: {
                Node* q = net.dueling_q_values(t3, feat3);
                ok = expect(q->v().shape == std::vector<int>{16}, "dueling head", detail) && ok;
                // two 512-unit streams exist by parameter audit
                int streams = 0;
                for (Parameter* p : net.params()) {
                    if (p->name == "value.fc1.weight")
                        streams += p->value.shape == std::vector<int>{512, 1024};
                    if (p->name == "advantage.fc1.weight")
                        streams += p->value.shape == std::vector<int>{512, 1024};
                    if (p->name == "value.out.weight")
                        streams += p->value.shape == std::vector<int>{1, 512};
                    if (p->name == "advantage.out.weight")
                        streams += p->value.shape == std::vector<int>{16, 512};
                }
                ok = expect(streams == 4, "dueling stream shapes", detail) && ok;
                break;
            }
        }
    }
    if (ok) detail = "table chain holds for all four variants";
    return ok;
}

// ---- criterion 3: tracer law ------------------------------------------------

bool run_tracer(Context&, std::string& detail) {
    Rng rng(1003);
    auto segs = testutil::make_segments(60, 2, 8, rng);
    auto grid = ActionSpace::default_grid();
    double worst = 0.0;
    for (double beta : {0.0, 0.2, 0.75, 1.0}) {
        const double t0v = 1.0;
        SessionEnv env(segs, grid, beta, t0v);
        env.reset();
        std::vector<double> props, traced;
        while (!env.done()) {
            const int a = rng.uniform_int(grid.size());
            props.push_back(grid.prt(a));
            traced.push_back(env.step(a).traced_rt);
        }
        for (size_t t = 0; t < traced.size(); ++t) {
            double closed = std::pow(beta, static_cast<double>(t + 1)) * t0v;
            for (size_t k = 0; k <= t; ++k)
                closed += (1.0 - beta) * std::pow(beta, static_cast<double>(t - k)) * props[k];
            worst = std::max(worst, std::abs(closed - traced[t]));
        }
    }
    const bool ok = worst < 1e-12;
    detail = "max closed-form deviation " + fmt(worst);
    return ok;
}

// ---- criterion 4: reward / target values ------------------------------------

bool run_reward_targets(Context&, std::string& detail) {
    bool ok = true;
    Rng rng(1004);

    // -|2.3 - 1.8| = -0.5 via the environment (beta 0.75, tRT 2.0, proposal 1.2)
    {
        auto segs = testutil::make_segments(2, 2, 8, rng, 2.3);
        ActionSpace grid;
        grid.proposals = {1.2, 2.5};
        SessionEnv env(segs, grid, 0.75, 2.0);
        env.reset();
        const auto r = env.step(0);
        ok = expect(std::abs(r.traced_rt - 1.8) < 1e-12, "tracer update", detail) && ok;
        ok = expect(std::abs(r.reward - (-0.5)) < 1e-12, "covered reward", detail) && ok;
    }
    // uncovered segment rewards zero for every action
    {
        auto segs = testutil::make_segments(3, 2, 8, rng);
        auto grid = ActionSpace::default_grid();
        for (int a : {0, 7, 15}) {
            SessionEnv env(segs, grid, 0.5, 1.0);
            env.reset();
            ok = expect(env.step(a).reward == 0.0, "uncovered reward", detail) && ok;
        }
    }
    // TD targets on constant-Q networks
    {
        NetworkConfig cfg;
        cfg.variant = Variant::Dqn;
        cfg.n_actions = 2;
        cfg.channels = 3;
        cfg.samples_per_subsecond = 8;
        cfg.conv_filters = 2;
        cfg.lstm_channels = 2;
        cfg.hidden = 6;
        const auto constant_net = [&](Variant v, std::vector<double> q) {
            NetworkConfig c = cfg;
            c.variant = v;
            QNetwork net(c);
            Rng r(5);
            net.init(r);
            for (Parameter* p : net.params()) {
                if (p->name == "head.out.weight") p->value.fill(0.0);
                if (p->name == "head.out.bias")
                    for (size_t i = 0; i < q.size(); ++i) p->value[static_cast<int64_t>(i)] = q[i];
            }
            return net;
        };
        auto segs = testutil::make_segments(2, 3, 8, rng);
        Transition tr;
        tr.state = &segs[0];
        tr.next_state = &segs[1];
        tr.action = 0;

        auto online = constant_net(Variant::Dqn, {0.0, 0.0});
        auto target = constant_net(Variant::Dqn, {1.0, 0.5});
        tr.reward = -0.5;
        const double y1 = compute_td_target(tr, online, target, 0.99, Variant::Dqn);
        ok = expect(std::abs(y1 - 0.49) < 1e-12, "bellman target 0.49 got " + fmt(y1), detail) && ok;

        auto online_d = constant_net(Variant::Double, {0.1, 0.9});
        auto target_d = constant_net(Variant::Double, {0.7, 0.3});
        tr.reward = 0.0;
        const double y2 = compute_td_target(tr, online_d, target_d, 0.99, Variant::Double);
        ok = expect(std::abs(y2 - 0.297) < 1e-12, "double target 0.297 got " + fmt(y2), detail) && ok;

        Transition done_tr = tr;
        done_tr.done = true;
        done_tr.next_state = nullptr;
        done_tr.reward = -0.3;
        const double y3 = compute_td_target(done_tr, online, target, 0.99, Variant::Dqn);
        ok = expect(y3 == -0.3, "terminal target", detail) && ok;
    }
    if (ok) detail = "all five documented values reproduced";
    return ok;
}

// ---- criterion 5: replay suite ----------------------------------------------

bool run_replay(Context&, std::string& detail) {
    bool ok = true;
    // FIFO eviction
    {
        ReplayQueue q(4);
        for (int i = 1; i <= 5; ++i) q.push({nullptr, i, 0.0, false, nullptr});
        std::vector<uint64_t> seqs;
        for (size_t i = 0; i < q.size(); ++i) seqs.push_back(q.slot_seq(i));
        std::sort(seqs.begin(), seqs.end());
        ok = expect(seqs == std::vector<uint64_t>{2, 3, 4, 5}, "FIFO eviction", detail) && ok;
    }
    // wrap at a small modulus
    {
        ReplayQueue q(16, 8);
        uint64_t last = 0;
        for (int i = 0; i < 8; ++i) last = q.push({});
        ok = expect(last == 0, "seq wraps to 0 on the 8th push", detail) && ok;
        last = q.push({});
        ok = expect(last == 1, "seq continues at 1 past the wrap", detail) && ok;
    }
    // no-copy identity + staleness re-draw
    {
        ReplayQueue q(4);
        for (int i = 1; i <= 4; ++i) q.push({nullptr, i, 0.0, false, nullptr});
        Rng rng(1005);
        BatchBuffer buf = q.sample(3, rng);
        auto batch = buf.resolve(q, rng);
        for (size_t i = 0; i < batch.size(); ++i)
            ok = expect(batch[i] == &q.slot(buf.entries()[i].slot), "no-copy identity",
                        detail) && ok;
        BatchBuffer buf2 = q.sample(3, rng);
        q.push({nullptr, 100, 0.0, false, nullptr});
        q.push({nullptr, 101, 0.0, false, nullptr});
        auto batch2 = buf2.resolve(q, rng);
        std::vector<const Transition*> uniq(batch2.begin(), batch2.end());
        std::sort(uniq.begin(), uniq.end());
        ok = expect(std::unique(uniq.begin(), uniq.end()) == uniq.end(),
                    "re-drawn batch has duplicates", detail) && ok;
        for (const auto& e : buf2.entries())
            ok = expect(q.slot_seq(e.slot) == e.expected_seq, "stale entry survived", detail) && ok;
    }
    // chi-square uniformity, df 7 at significance 0.001
    {
        ReplayQueue q(8);
        for (int i = 0; i < 8; ++i) q.push({});
        Rng rng(1006);
        std::array<int64_t, 8> counts{};
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            BatchBuffer b = q.sample(1, rng);
            counts[b.entries()[0].slot]++;
        }
        double chi2 = 0.0;
        for (int64_t c : counts) {
            const double d = static_cast<double>(c) - n / 8.0;
            chi2 += d * d / (n / 8.0);
        }
        ok = expect(chi2 < 24.3219, "chi-square " + fmt(chi2) + " >= 24.3219", detail) && ok;
        if (ok && detail.empty()) detail = "chi-square " + fmt(chi2) + " (crit 24.32)";
    }
    return ok;
}

// ---- criterion 6: signal suite ----------------------------------------------

bool run_signal(Context&, std::string& detail) {
    bool ok = true;
    const double fs = 500.0;
    const auto sine = [&](double f, double secs) {
        std::vector<double> x(static_cast<size_t>(secs * fs));
        for (size_t i = 0; i < x.size(); ++i)
            x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
        return x;
    };
    const auto amplitude = [](const std::vector<double>& x, double f, double rate) {
        const size_t lo = x.size() / 4, hi = 3 * x.size() / 4;
        double re = 0.0, im = 0.0;
        for (size_t i = lo; i < hi; ++i) {
            const double w = 2.0 * std::numbers::pi * f * static_cast<double>(i) / rate;
            re += x[i] * std::cos(w);
            im += x[i] * std::sin(w);
        }
        return 2.0 * std::sqrt(re * re + im * im) / static_cast<double>(hi - lo);
    };

    // DC attenuation
    {
        std::vector<double> dc(5000, 1.0);
        auto y = bandpass_filter(dc, fs);
        double worst = 0.0;
        for (size_t i = y.size() / 4; i < 3 * y.size() / 4; ++i)
            worst = std::max(worst, std::abs(y[i]));
        ok = expect(worst < 1e-3, "DC residue " + fmt(worst), detail) && ok;
    }
    // 100 Hz: at least 40 dB down, matching the analytic |H|^2 oracle
    {
        auto y = bandpass_filter(sine(100.0, 10.0), fs);
        const double measured = amplitude(y, 100.0, fs);
        const auto sos = design_butter_bandpass(FilterSpec{}, fs);
        const double h = sos_magnitude(sos, 100.0, fs);
        const double analytic = h * h;
        ok = expect(measured <= 1e-2, "100 Hz attenuation " + fmt(measured), detail) && ok;
        ok = expect(std::abs(measured - analytic) <= 0.05 * analytic,
                    "measured " + fmt(measured) + " vs analytic " + fmt(analytic), detail) && ok;
        ok = expect(20.0 * std::log10(analytic) <= -40.0, "analytic response above -40 dB",
                    detail) && ok;
    }
    // 10 Hz within 2% through filter + resample
    {
        auto y = resample(bandpass_filter(sine(10.0, 10.0), fs), fs, 128.0);
        const double a = amplitude(y, 10.0, 128.0);
        ok = expect(std::abs(a - 1.0) <= 0.02, "10 Hz chain amplitude " + fmt(a), detail) && ok;
    }
    // length law
    {
        for (size_t n : {1500u, 1501u, 12345u, 300000u}) {
            std::vector<double> x(n, 0.5);
            const size_t expect_n = (n * 128) / 500;
            ok = expect(resample(x, 500.0, 128.0).size() == expect_n,
                        "length law at n=" + std::to_string(n), detail) && ok;
        }
    }
    if (ok) detail = "filter, resampler and chain within stated tolerances";
    return ok;
}

// ---- criterion 7: metric oracles ---------------------------------------------

bool run_metrics(Context&, std::string& detail) {
    Rng rng(1007);
    bool ok = true;
    double worst = 0.0;

    for (int rep = 0; rep < 20; ++rep) {
        const size_t n = 5 + static_cast<size_t>(rng.uniform_int(60));
        std::vector<double> a(n), b(n);
        for (size_t i = 0; i < n; ++i) {
            a[i] = rng.uniform(-4, 4);
            b[i] = rng.uniform(-4, 4);
        }
        // brute-force rmse
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        const double r_ref = std::sqrt(acc / static_cast<double>(n));
        worst = std::max(worst, std::abs(rmse(a, b) - r_ref));

        // brute-force pearson
        double ma = 0.0, mb = 0.0;
        for (size_t i = 0; i < n; ++i) {
            ma += a[i];
            mb += b[i];
        }
        ma /= static_cast<double>(n);
        mb /= static_cast<double>(n);
        double num = 0.0, da = 0.0, db = 0.0;
        for (size_t i = 0; i < n; ++i) {
            num += (a[i] - ma) * (b[i] - mb);
            da += (a[i] - ma) * (a[i] - ma);
            db += (b[i] - mb) * (b[i] - mb);
        }
        const double p_ref = num / std::sqrt(da * db);
        worst = std::max(worst, std::abs(pearson_correlation(a, b) - p_ref));
    }

    // spline vs dense Gaussian elimination
    for (int rep = 0; rep < 10; ++rep) {
        const size_t n = 3 + static_cast<size_t>(rng.uniform_int(12));
        std::vector<double> kx(n), ky(n);
        double t = 0.0;
        for (size_t i = 0; i < n; ++i) {
            t += 0.3 + rng.uniform();
            kx[i] = t;
            ky[i] = rng.uniform(-3, 3);
        }
        NaturalSpline spline(kx, ky);

        const size_t k = n - 2;
        std::vector<double> m(n, 0.0);
        if (k > 0) {
            std::vector<std::vector<double>> aug(k, std::vector<double>(k + 1, 0.0));
            for (size_t i = 0; i < k; ++i) {
                const double h0 = kx[i + 1] - kx[i];
                const double h1 = kx[i + 2] - kx[i + 1];
                if (i > 0) aug[i][i - 1] = h0;
                aug[i][i] = 2.0 * (h0 + h1);
                if (i + 1 < k) aug[i][i + 1] = h1;
                aug[i][k] = 6.0 * ((ky[i + 2] - ky[i + 1]) / h1 - (ky[i + 1] - ky[i]) / h0);
            }
            for (size_t col = 0; col < k; ++col) {
                size_t piv = col;
                for (size_t r2 = col + 1; r2 < k; ++r2)
                    if (std::abs(aug[r2][col]) > std::abs(aug[piv][col])) piv = r2;
                std::swap(aug[piv], aug[col]);
                for (size_t r2 = 0; r2 < k; ++r2) {
                    if (r2 == col || aug[r2][col] == 0.0) continue;
                    const double f = aug[r2][col] / aug[col][col];
                    for (size_t c2 = col; c2 <= k; ++c2) aug[r2][c2] -= f * aug[col][c2];
                }
            }
            for (size_t i = 0; i < k; ++i) m[i + 1] = aug[i][k] / aug[i][i];
        }
        const auto dense_eval = [&](double q) {
            if (q <= kx.front()) return ky.front();
            if (q >= kx.back()) return ky.back();
            size_t i = 0;
            while (kx[i + 1] < q) ++i;
            const double h = kx[i + 1] - kx[i];
            const double A = (kx[i + 1] - q) / h;
            const double B = (q - kx[i]) / h;
            return A * ky[i] + B * ky[i + 1] +
                   ((A * A * A - A) * m[i] + (B * B * B - B) * m[i + 1]) * h * h / 6.0;
        };
        for (double q = kx.front() - 0.5; q <= kx.back() + 0.5; q += 0.17)
            worst = std::max(worst, std::abs(spline(q) - dense_eval(q)));
    }

    ok = expect(worst < 1e-9, "oracle deviation " + fmt(worst), detail) && ok;
    if (ok) detail = "max deviation from brute-force oracles " + fmt(worst);
    return ok;
}

// ---- criterion 8: contrived-MDP learning -------------------------------------

bool run_contrived(Context& ctx, std::string& detail) {
    const auto t0 = clk::now();
    auto segs = contrived_segments();
    NetworkConfig nc;
    nc.variant = Variant::Dueling;
    QNetwork net(nc);
    const RlTrainConfig rl = contrived_config();
    auto res = train_rl({&segs}, nullptr, ActionSpace::default_grid(), rl, net);
    const double secs = seconds_since(t0);

    const int window = std::max(1, rl.episodes / 5);
    double mean_ret = 0.0;
    for (int i = rl.episodes - window; i < rl.episodes; ++i)
        mean_ret += res.log.episode_return[static_cast<size_t>(i)];
    mean_ret /= window;

    auto rollout = greedy_rollout(net, segs, ActionSpace::default_grid(), 0.0, 1.0);
    int hits = 0;
    for (double v : rollout)
        if (v == 2.0) ++hits;
    const double frac = static_cast<double>(hits) / static_cast<double>(rollout.size());

    ctx.contrived_ran = true;
    ctx.contrived_log = res.log;
    ctx.contrived_param_blob.clear();
    for (const Parameter* p : net.params())
        ctx.contrived_param_blob.insert(ctx.contrived_param_blob.end(), p->value.data.begin(),
                                        p->value.data.end());

    bool ok = true;
    const double floor = -0.2 * static_cast<double>(kContrivedSegments);
    ok = expect(mean_ret > floor,
                "mean return " + fmt(mean_ret) + " not above " + fmt(floor), detail) && ok;
    ok = expect(frac >= 0.9, "greedy 2.0 preference " + fmt(frac), detail) && ok;
    ok = expect(secs < 600.0, "runtime " + fmt(secs) + " s exceeds 10 minutes", detail) && ok;
    if (ok)
        detail = "mean return " + fmt(mean_ret) + " (floor " + fmt(floor) + "), preference " +
                 fmt(frac) + ", " + fmt(secs) + " s";
    return ok;
}

// ---- criterion 9: end-to-end synthetic study ----------------------------------

bool run_study(Context& ctx, std::string& detail) {
    const auto t0 = clk::now();
    ctx.ensure_study_sessions();

    std::vector<PreppedSession> prepped;
    std::vector<LatentTrace> latents;
    for (int i = 0; i < 3; ++i) {
        Session s = load_session((ctx.work / ("s" + std::to_string(i + 1))).string());
        auto lat = load_latent((ctx.work / ("s" + std::to_string(i + 1))).string());
        if (!lat) {
            detail = "study session lacks a latent trace";
            return false;
        }
        prepped.push_back(preprocess_session(s));
        latents.push_back(std::move(*lat));
    }

    const auto grid = ActionSpace::default_grid();
    RlTrainConfig rl;
    rl.episodes = kStudyEpisodes;
    rl.beta = 0.75;
    rl.gamma = kStudyGamma;
    rl.learning_rate = kStudyLr;
    rl.val_interval = kStudyValInterval;
    rl.seed = kStudyTrainSeed;

    double mean_segments =
        0.5 * (static_cast<double>(prepped[0].segments.size()) +
               static_cast<double>(prepped[1].segments.size()));
    ctx.study_decay_steps = 0.5 * rl.episodes * mean_segments;

    NetworkConfig nc;
    nc.variant = Variant::Dueling;
    QNetwork net(nc);
    // the second training session doubles as the validation session for
    // stopping-point selection; the third stays held out
    auto res = train_rl({&prepped[0].segments, &prepped[1].segments}, &prepped[1].segments,
                        grid, rl, net);
    if (res.has_best) {
        auto params = net.params();
        for (size_t i = 0; i < params.size(); ++i) params[i]->value = res.best_params[i];
    }

    const auto latent_mid = latent_at_segments(latents[2], prepped[2].segments.size());
    auto rollout = greedy_rollout(net, prepped[2].segments, grid, rl.beta, rl.initial_trt);
    const double rl_corr = pearson_correlation(rollout, latent_mid);

    // supervised baseline on the same two training sessions
    std::vector<TrialSample> trials;
    for (int i = 0; i < 2; ++i)
        trials.insert(trials.end(), prepped[static_cast<size_t>(i)].sl_trials.begin(),
                      prepped[static_cast<size_t>(i)].sl_trials.end());
    NetworkConfig scfg;
    scfg.variant = Variant::Supervised;
    QNetwork snet(scfg);
    SlTrainConfig sl;
    sl.seed = kStudyTrainSeed;
    train_supervised(trials, sl, snet);
    std::vector<double> sl_pred;
    sl_pred.reserve(prepped[2].segments.size());
    for (const auto& seg : prepped[2].segments) sl_pred.push_back(snet.predict_rt(seg.planes));
    double sl_corr = -1.0;
    try {
        sl_corr = pearson_correlation(sl_pred, latent_mid);
    } catch (const std::invalid_argument&) {
        sl_corr = -1.0;  // constant predictions count as no correlation
    }

    const double secs = seconds_since(t0);
    ctx.study_ran = true;
    ctx.study_rl_corr = rl_corr;
    ctx.study_sl_corr = sl_corr;
    ctx.study_prefix_returns.assign(
        res.log.episode_return.begin(),
        res.log.episode_return.begin() + std::min<size_t>(kPrefixEpisodes,
                                                          res.log.episode_return.size()));
    // the determinism rerun compares its whole loss log against this one
    ctx.study_prefix_losses = res.log.step_loss;

    bool ok = true;
    ok = expect(rl_corr >= 0.4, "RL correlation " + fmt(rl_corr) + " below 0.4", detail) && ok;
    ok = expect(rl_corr >= sl_corr,
                "RL correlation " + fmt(rl_corr) + " below SL " + fmt(sl_corr), detail) && ok;
    ok = expect(secs < 2700.0, "runtime " + fmt(secs) + " s exceeds 45 minutes", detail) && ok;
    if (ok)
        detail = "RL corr " + fmt(rl_corr) + ", SL corr " + fmt(sl_corr) + ", " + fmt(secs) +
                 " s";
    return ok;
}

// ---- criterion 10: beta sweep -------------------------------------------------

bool run_sweep(Context& ctx, std::string& detail) {
    ctx.ensure_study_sessions();
    const std::string csv = (ctx.work / "beta_sweep.csv").string();
    const std::string log = (ctx.work / "sweep_log.txt").string();
    const std::string cfg_path = (ctx.work / "sweep_config.json").string();
    {
        std::ofstream cfg(cfg_path, std::ios::trunc);
        cfg << "{\"rl\": {\"gamma\": " << kStudyGamma << ", \"learning_rate\": " << kStudyLr
            << ", \"val_interval\": " << kStudyValInterval << "}}\n";
    }
    std::ostringstream cmd;
    cmd << EEGRL_BIN << " --config " << cfg_path << " sweep-beta --values 0.2 0.75 --episodes "
        << kSweepEpisodes << " --seed " << kStudyTrainSeed << " --train "
        << (ctx.work / "s1").string() << " " << (ctx.work / "s2").string() << " --val "
        << (ctx.work / "s2").string() << " --test " << (ctx.work / "s3").string() << " --out "
        << csv << " >" << log << " 2>&1";
    const int rc = std::system(cmd.str().c_str());
    if (WEXITSTATUS(rc) != 0) {
        detail = "sweep-beta command failed; see " + log;
        return false;
    }

    std::ifstream f(csv);
    std::string line;
    std::getline(f, line);
    double corr_low = -2.0, corr_high = -2.0;
    while (std::getline(f, line)) {
        std::stringstream ss(line);
        std::string b, r, c;
        std::getline(ss, b, ',');
        std::getline(ss, r, ',');
        std::getline(ss, c);
        if (c.empty()) continue;
        const double beta = std::stod(b);
        if (std::abs(beta - 0.2) < 1e-9) corr_low = std::stod(c);
        if (std::abs(beta - 0.75) < 1e-9) corr_high = std::stod(c);
    }
    bool ok = true;
    ok = expect(corr_low > -2.0 && corr_high > -2.0, "sweep table incomplete", detail) && ok;
    ok = expect(corr_high > corr_low,
                "corr(0.75)=" + fmt(corr_high) + " not above corr(0.2)=" + fmt(corr_low),
                detail) && ok;
    if (ok) detail = "corr 0.75: " + fmt(corr_high) + " > corr 0.2: " + fmt(corr_low);
    return ok;
}

// ---- criterion 11: determinism --------------------------------------------------

bool run_determinism(Context& ctx, std::string& detail) {
    bool ok = true;

    // the generator reproduces sessions bit for bit
    {
        auto [a, ta] = generate_session(study_synth(kStudySeeds[0]));
        auto [b, tb] = generate_session(study_synth(kStudySeeds[0]));
        ok = expect(a.eeg.data == b.eeg.data, "generator eeg not reproducible", detail) && ok;
        ok = expect(ta.d == tb.d, "generator latent not reproducible", detail) && ok;
    }

    // criterion 8 training reproduces its prefix bit for bit
    {
        if (!ctx.contrived_ran) {
            std::string sub;
            if (!run_contrived(ctx, sub)) {
                detail = "contrived run unavailable: " + sub;
                return false;
            }
        }
        auto segs = contrived_segments();
        RlTrainConfig rl = contrived_config();
        const double full_decay = 0.5 * rl.episodes * static_cast<double>(segs.size());
        rl.episodes = std::min(rl.episodes, 40);
        rl.epsilon_decay_steps = full_decay;
        NetworkConfig nc;
        nc.variant = Variant::Dueling;
        QNetwork net(nc);
        auto res = train_rl({&segs}, nullptr, ActionSpace::default_grid(), rl, net);
        for (size_t i = 0; i < res.log.episode_return.size(); ++i)
            ok = expect(res.log.episode_return[i] == ctx.contrived_log.episode_return[i],
                        "contrived returns diverge at episode " + std::to_string(i + 1),
                        detail) && ok;
        for (size_t i = 0; i < res.log.step_loss.size(); ++i)
            ok = expect(res.log.step_loss[i] == ctx.contrived_log.step_loss[i],
                        "contrived losses diverge at learn step " + std::to_string(i + 1),
                        detail) && ok;
    }

    // criteria 9/10 share the train_rl path; its study-scale prefix is
    // reproduced bit for bit under the pinned epsilon ramp
    if (ctx.study_ran) {
        ctx.ensure_study_sessions();
        std::vector<PreppedSession> prepped;
        for (int i = 1; i <= 2; ++i)
            prepped.push_back(
                preprocess_session(load_session((ctx.work / ("s" + std::to_string(i))).string())));
        RlTrainConfig rl;
        rl.episodes = kPrefixEpisodes;
        rl.beta = 0.75;
        rl.gamma = kStudyGamma;
        rl.learning_rate = kStudyLr;
        rl.seed = kStudyTrainSeed;
        rl.epsilon_decay_steps = ctx.study_decay_steps;
        NetworkConfig nc;
        nc.variant = Variant::Dueling;
        QNetwork net(nc);
        auto res = train_rl({&prepped[0].segments, &prepped[1].segments}, nullptr,
                            ActionSpace::default_grid(), rl, net);
        for (size_t i = 0; i < res.log.episode_return.size(); ++i)
            ok = expect(res.log.episode_return[i] == ctx.study_prefix_returns[i],
                        "study returns diverge at episode " + std::to_string(i + 1), detail) && ok;
        for (size_t i = 0;
             i < res.log.step_loss.size() && i < ctx.study_prefix_losses.size(); ++i)
            ok = expect(res.log.step_loss[i] == ctx.study_prefix_losses[i],
                        "study losses diverge at learn step " + std::to_string(i + 1),
                        detail) && ok;
    } else {
        detail = "study (criterion 9) must run before the determinism check";
        return false;
    }

    if (ok) detail = "generator, contrived run and study prefix reproduce bit-exactly";
    return ok;
}

}  // namespace

void Context::ensure_study_sessions() {
    if (study_sessions_ready) return;
    std::filesystem::create_directories(work);
    for (int i = 0; i < 3; ++i) {
        const auto dir = work / ("s" + std::to_string(i + 1));
        if (!std::filesystem::exists(dir / "meta.json")) {
            auto [session, latent] = generate_session(study_synth(kStudySeeds[i]));
            save_session(session, dir.string(), &latent);
        }
    }
    study_sessions_ready = true;
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list{
        {1, "gradient suite (finite-difference oracle, < 2 min)", run_gradients},
        {2, "table shape chain for all four variants", run_shapes},
        {3, "tracer closed form within 1e-12", run_tracer},
        {4, "reward and TD-target unit values", run_reward_targets},
        {5, "replay: FIFO, wrap, no-copy, staleness, uniformity", run_replay},
        {6, "signal chain: DC, 100 Hz, 10 Hz, length law", run_signal},
        {7, "metric oracle equivalence within 1e-9", run_metrics},
        {8, "contrived-MDP learning (< 10 min)", run_contrived},
        {9, "end-to-end synthetic study (< 45 min)", run_study},
        {10, "beta sweep: corr(0.75) > corr(0.2)", run_sweep},
        {11, "determinism of criteria 8-10 under fixed seeds", run_determinism},
    };
    return list;
}

}  // namespace acceptance
