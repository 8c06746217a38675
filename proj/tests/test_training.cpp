#include <fstream>
#include <random>

#include "cva/errors.hpp"
#include "cva/matching.hpp"
#include "cva/training.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cva;

namespace {

/// Horizontal stripes, four rows each, alternating between one-hot curves (minimum at a
/// random disparity, labelled correct) and flat curves (labelled incorrect).
struct SeparableData {
    std::vector<CostVolume> volumes;
    std::vector<DisparityMap> disparities;
    std::vector<GroundTruthMap> truths;
};

SeparableData separable(int w, int h, int depth, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pos(0, depth - 1);
    CostVolume vol(w, h, depth, 1.0f, true);
    GroundTruthMap gt(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto c = vol.curve(x, y);
            if ((y / 4) % 2 == 0) {
                const int m = pos(rng);
                c[static_cast<std::size_t>(m)] = 0.0f;
                gt.set(x, y, m);
            } else {
                std::fill(c.begin(), c.end(), 0.5f);
                gt.set(x, y, depth - 1);  // WTA picks 0, far from the reference
            }
        }
    SeparableData d;
    d.disparities.push_back(matching::wta_disparity(vol));
    d.truths.push_back(gt);
    d.volumes.push_back(std::move(vol));
    return d;
}

net::NetworkConfig tiny_net() {
    net::NetworkConfig c;
    c.patch_size = 3;
    c.depth = 8;
    c.channels = 4;
    c.depth_kernels = {3};
    c.head_width = 8;
    c.dropout_rate = 0.0;
    return c;
}

}  // namespace

TEST_CASE("labeling rule examples") {
    CHECK(training::label_correctness(42.0, 42.0));
    CHECK(training::label_correctness(104.0, 100.0));
    CHECK_FALSE(training::label_correctness(13.0, 10.0));
    CHECK(training::label_correctness(12.9, 10.0));
    CHECK_FALSE(training::label_correctness(105.0, 100.0));
}

TEST_CASE("labeling rule is symmetric in the sign of the error") {
    for (int d = 0; d < 300; ++d)
        for (int h = 0; h <= 60; ++h) {
            const double e = h * 0.5;
            if (d - e < 0) continue;
            CHECK(training::label_correctness(d + e, d) == training::label_correctness(d - e, d));
        }
}

TEST_CASE("labeling rule agrees with integer arithmetic on a half-pixel grid") {
    for (int d = 0; d < 256; ++d)
        for (int h = 0; h <= 40; ++h) CHECK(training::label_correctness(d + h * 0.5, d) == oracle::correct_half_steps(h, d));
}

TEST_CASE("binary cross-entropy") {
    CHECK(training::bce_loss(0.5, 1.0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(training::bce_loss(0.5, 0.0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(training::bce_loss(0.9, 0.0) == doctest::Approx(2.302585).epsilon(1e-6));
    CHECK(training::bce_loss(1.0 - 1e-9, 1.0) < 1e-8);
    CHECK(std::isfinite(training::bce_loss(0.0, 1.0)));
    CHECK(training::bce_loss(0.0, 1.0) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("training set construction") {
    const CostVolume vol(20, 20, 4, 0.5f, true);
    DisparityMap disp(20, 20, 3);
    GroundTruthMap none(20, 20);
    std::vector<CostVolume> vols{vol};
    CHECK(training::build_training_set(vols, std::vector{disp}, std::vector{none}, 13).samples.empty());

    GroundTruthMap full(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) full.set(x, y, 0.0);
    const auto set = training::build_training_set(vols, std::vector{disp}, std::vector{full}, 13);
    REQUIRE(set.samples.size() == 64);
    CHECK(set.samples.front() == training::TrainSample{0, 6, 6, 1.0f});
    CHECK(set.samples[1] == training::TrainSample{0, 7, 6, 1.0f});
    CHECK(set.samples.back() == training::TrainSample{0, 13, 13, 1.0f});
    const auto patch = set.patch(0);
    CHECK(patch.center_x == 6);
    CHECK(patch.size == 13);
}

TEST_CASE("training labels match a per-pixel scan") {
    std::mt19937_64 rng(4);
    std::vector<CostVolume> vols;
    std::vector<DisparityMap> disps;
    std::vector<GroundTruthMap> gts;
    std::size_t expected_pos = 0, expected_total = 0;
    for (int i = 0; i < 3; ++i) {
        vols.push_back(testing::random_volume(15, 11, 10, 10 + i));
        disps.push_back(matching::wta_disparity(vols.back()));
        GroundTruthMap gt(15, 11);
        std::uniform_real_distribution<double> u(0.0, 9.0);
        std::bernoulli_distribution valid(0.6);
        for (int y = 0; y < 11; ++y)
            for (int x = 0; x < 15; ++x)
                if (valid(rng)) gt.set(x, y, u(rng));
        for (int y = 2; y < 9; ++y)
            for (int x = 2; x < 13; ++x) {
                if (!gt.is_valid(x, y)) continue;
                ++expected_total;
                const double e = std::abs(disps.back().at(x, y) - gt.at(x, y));
                if (e < 3.0 || e < 0.05 * gt.at(x, y)) ++expected_pos;
            }
        gts.push_back(gt);
    }
    const auto set = training::build_training_set(vols, disps, gts, 5);
    CHECK(set.samples.size() == expected_total);
    CHECK(set.positives() == expected_pos);
    for (std::size_t i = 1; i < set.samples.size(); ++i) {
        const auto& a = set.samples[i - 1];
        const auto& b = set.samples[i];
        CHECK(std::tuple(a.image, a.y, a.x) < std::tuple(b.image, b.y, b.x));
    }
}

TEST_CASE("training set preconditions") {
    std::vector<CostVolume> vols{CostVolume(5, 5, 3, 0.0f, true)};
    std::vector<DisparityMap> disp{DisparityMap(5, 4, 2)};
    std::vector<GroundTruthMap> gt{GroundTruthMap(5, 5)};
    CHECK_THROWS_AS(training::build_training_set(vols, disp, gt, 3), std::invalid_argument);
    std::vector<CostVolume> raw{CostVolume(5, 5, 3)};
    std::vector<DisparityMap> ok{DisparityMap(5, 5, 2)};
    CHECK_THROWS_AS(training::build_training_set(raw, ok, gt, 3), InvalidStateError);
    CHECK_THROWS_AS(training::build_training_set(vols, ok, std::vector<GroundTruthMap>{}, 3), std::invalid_argument);
}

TEST_CASE("Adam first step moves by about lr against the gradient sign") {
    std::vector<double> w{1.0, -2.0}, m(2, 0.0), v(2, 0.0);
    const std::vector<double> g{3.0, -0.01};
    training::adam_update<double>(w, g, m, v, 1, 0.1, {});
    CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(w[1] == doctest::Approx(-1.9).epsilon(1e-5));
}

TEST_CASE("Adam with zero gradient leaves parameters and decays moments") {
    std::vector<double> w{0.5}, m{0.2}, v{0.04};
    training::adam_update<double>(w, std::vector<double>{0.0}, m, v, 3, 0.01, {});
    CHECK(m[0] == doctest::Approx(0.18));
    CHECK(v[0] == doctest::Approx(0.04 * 0.999));
    // The decayed first moment still moves w; only a zero history leaves it in place.
    std::vector<double> w0{0.5}, m0{0.0}, v0{0.0};
    training::adam_update<double>(w0, std::vector<double>{0.0}, m0, v0, 1, 0.01, {});
    CHECK(w0[0] == 0.5);
}

TEST_CASE("Adam with zero learning rate is the identity") {
    std::vector<float> w{0.25f, -7.0f}, m(2, 0.0f), v(2, 0.0f);
    training::adam_update<float>(w, std::vector<float>{5.0f, -1.0f}, m, v, 1, 0.0, {});
    CHECK(w == std::vector<float>{0.25f, -7.0f});
}

TEST_CASE("ten Adam steps on a quadratic follow the scalar recurrence") {
    // minimize (w - 3)^2, gradient 2 (w - 3)
    double w = 0.0, m = 0.0, v = 0.0;
    std::vector<double> ww{0.0}, mm{0.0}, vv{0.0};
    for (int t = 1; t <= 10; ++t) {
        const double g = 2.0 * (w - 3.0);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, t));
        const double vh = v / (1.0 - std::pow(0.999, t));
        w -= 0.5 * mh / (std::sqrt(vh) + 1e-8);
        training::adam_update<double>(ww, std::vector<double>{2.0 * (ww[0] - 3.0)}, mm, vv, t, 0.5, {});
        CHECK(ww[0] == doctest::Approx(w).epsilon(1e-12));
    }
    CHECK(w > 2.0);
}

TEST_CASE("adam_step skips running statistics") {
    auto p = net::init_params<double>(tiny_net(), 1);
    auto state = training::make_adam_state(p);
    net::Gradients<double> g;
    for (const auto& b : p.blobs) g.emplace_back(b.values.size(), 1.0);
    const auto before = p;
    training::adam_step(p, g, state, 0.01, {});
    CHECK(state.step == 1);
    for (std::size_t b = 0; b < p.blobs.size(); ++b) {
        if (p.blobs[b].trainable)
            CHECK(p.blobs[b].values != before.blobs[b].values);
        else
            CHECK(p.blobs[b].values == before.blobs[b].values);
    }
}

TEST_CASE("epoch order is a seeded permutation") {
    const auto a = training::epoch_order(5, 1, 1000);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
    CHECK(a == training::epoch_order(5, 1, 1000));
    CHECK(a != training::epoch_order(5, 2, 1000));
    CHECK(a != training::epoch_order(6, 1, 1000));
}

TEST_CASE("training defaults follow the published schedule") {
    const training::TrainConfig c;
    CHECK(c.batch_size == 256);
    CHECK(c.phase1_epochs == 10);
    CHECK(c.phase1_lr == 1e-4);
    CHECK(c.phase2_epochs == 3);
    CHECK(c.phase2_lr == 1e-5);
    CHECK(c.adam.beta1 == 0.9);
    CHECK(c.adam.beta2 == 0.999);
    CHECK(net::NetworkConfig{}.dropout_rate == 0.5);
    training::TrainConfig bad;
    bad.phase2_lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("zero epochs return the initialization; equal seeds give equal parameters") {
    auto data = separable(12, 12, 8, 1);
    const auto set = training::build_training_set(data.volumes, data.disparities, data.truths, 3);
    training::TrainConfig cfg;
    cfg.phase1_epochs = 0;
    cfg.phase2_epochs = 0;
    cfg.seed = 9;
    const auto r0 = training::train(cfg, tiny_net(), set);
    const auto init = net::init_params<float>(tiny_net(), 9);
    for (std::size_t b = 0; b < init.blobs.size(); ++b) CHECK(r0.params.blobs[b].values == init.blobs[b].values);
    CHECK(r0.steps.empty());

    cfg.phase1_epochs = 2;
    cfg.phase2_epochs = 1;
    cfg.batch_size = 16;
    auto net_cfg = tiny_net();
    net_cfg.dropout_rate = 0.5;
    const auto a = training::train(cfg, net_cfg, set);
    const auto b = training::train(cfg, net_cfg, set);
    CHECK(net::encode_params(a.params) == net::encode_params(b.params));
    CHECK(a.epoch_losses.size() == 3);
    CHECK(a.steps.back().lr == 1e-5);
    CHECK(a.steps.front().lr == 1e-4);
    CHECK(a.steps.size() == 3 * ((set.samples.size() + 15) / 16));
}

TEST_CASE("separable task: final epoch loss drops below a tenth of the first") {
    auto data = separable(24, 26, 8, 3);
    const auto set = training::build_training_set(data.volumes, data.disparities, data.truths, 3);
    CHECK(set.samples.size() >= 500);
    training::TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.phase1_epochs = 20;
    cfg.phase1_lr = 1e-2;
    cfg.phase2_epochs = 2;
    cfg.phase2_lr = 1e-3;
    cfg.seed = 1;
    const auto r = training::train(cfg, tiny_net(), set);
    CHECK(r.epoch_losses.back() < 0.1 * r.epoch_losses.front());
}

TEST_CASE("loss on a fixed batch trends down for a small learning rate") {
    auto data = separable(12, 12, 8, 5);
    auto p = net::init_params<float>(tiny_net(), 2);
    std::vector<std::pair<int, int>> centers;
    std::vector<float> labels;
    for (int y = 1; y < 11; ++y)
        for (int x = 1; x < 11; x += 3) {
            centers.emplace_back(x, y);
            labels.push_back((y / 4) % 2 == 0 ? 1.0f : 0.0f);
        }
    const auto batch = net::make_batch<float>(data.volumes[0], centers, 3);
    auto state = training::make_adam_state(p);
    std::vector<double> losses;
    for (int step = 0; step < 40; ++step) {
        const auto r = net::backward<float>(p, batch, labels);
        losses.push_back(r.loss);
        training::adam_step(p, r.gradients, state, 1e-3, {});
    }
    int increases = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) increases += losses[i] > losses[i - 1];
    CHECK(increases <= 4);
    CHECK(losses.back() < losses.front());
}

TEST_CASE("loss log CSV and epoch callback") {
    auto data = separable(10, 10, 8, 2);
    const auto set = training::build_training_set(data.volumes, data.disparities, data.truths, 3);
    training::TrainConfig cfg;
    cfg.phase1_epochs = 2;
    cfg.phase2_epochs = 0;
    cfg.batch_size = 20;
    std::vector<int> seen;
    const auto r = training::train(cfg, tiny_net(), set, [&](int e, const net::NetworkParams<float>&) { seen.push_back(e); });
    CHECK(seen == std::vector<int>{1, 2});
    testing::TempDir dir("loss");
    training::write_loss_log(dir / "loss.csv", r.steps);
    std::ifstream in(dir / "loss.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "epoch,step,loss,lr");
    CHECK(first.rfind("1,1,", 0) == 0);
}
