#include <doctest.h>
#include <otids/svm.hpp>
#include "oracles.hpp"
#include <cmath>
#include <numbers>

using namespace otids;

namespace {

SvmConfig hard_linear(double cost = 1000)
{
    SvmConfig c;
    c.kernel.kind = KernelKind::linear;
    c.cost = cost;
    c.class_weights = ClassWeights{1, 1};
    c.tolerance = 1e-6;
    c.max_passes = 20000;
    return c;
}

FeatureMatrix column(std::initializer_list<double> xs)
{
    Matrix x(static_cast<Index>(xs.size()), 1);
    Index i = 0;
    for (double v : xs) x(i++, 0) = v;
    return make_feature_matrix(x);
}

double training_accuracy(const TrainedSvm& s, const FeatureMatrix& m, const Labels& y)
{
    return static_cast<double>((decide(s, m).array() == y.array()).count()) / static_cast<double>(y.size());
}

std::pair<FeatureMatrix, Labels> noisy_set(Rng& rng)
{
    const Index n = 20 + static_cast<Index>(rng.below(30));
    Matrix x(n, 2);
    Labels y(n);
    for (Index i = 0; i < n; ++i) {
        y(i) = i % 3 == 0 ? 1 : -1;
        x(i, 0) = rng.normal(y(i) * 0.8, 1.0);
        x(i, 1) = rng.normal(0.0, 1.0);
    }
    return {make_feature_matrix(x), y};
}

} // namespace

TEST_CASE("kernel examples")
{
    KernelSpec rbf{KernelKind::rbf, 0.5};
    Eigen::Vector2d x(0, 0), z(2, 0);
    CHECK(kernel_eval(rbf, x, x) == 1.0);
    CHECK(kernel_eval(rbf, x, z) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    KernelSpec lin{KernelKind::linear};
    CHECK(kernel_eval(lin, Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)) == 11.0);
    KernelSpec poly{KernelKind::polynomial, 1.0, 2, 1.0};
    CHECK(kernel_eval(poly, Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)) == 144.0);
    CHECK_THROWS_AS(kernel_eval(lin, Vector(Vector::Ones(2)), Vector(Vector::Ones(3))), Error);
}

TEST_CASE("two-point problem")
{
    // Symmetry gives alpha_1 = alpha_2 = a, b = 0; w = 2a and the margin
    // condition w * 1 = 1 gives a = 1/2.
    const auto m = column({1.0, -1.0});
    Labels y(2);
    y << 1, -1;
    const auto s = train_svm(m, y, hard_linear());
    REQUIRE(s.alpha.size() == 2);
    CHECK(s.alpha(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.alpha(1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::abs(s.bias) <= 1e-6);
    CHECK(s.converged);
    CHECK(decide(s, RowVector::Constant(1, 0.5)) == 1);
    CHECK(decide(s, RowVector::Constant(1, -0.5)) == -1);
    CHECK(std::abs(margin(s, RowVector::Zero(1))) <= 1e-6);
}

TEST_CASE("zero labels are read as the negative class")
{
    const auto m = column({1.0, -1.0});
    Labels y(2);
    y << 1, 0;
    const auto s = train_svm(m, y, hard_linear());
    CHECK(decide(s, RowVector::Constant(1, -2.0)) == -1);
}

TEST_CASE("xor")
{
    Matrix x(4, 2);
    x << 0, 0, 1, 1, 0, 1, 1, 0;
    Labels y(4);
    y << -1, -1, 1, 1;
    const auto m = make_feature_matrix(x);
    CHECK(training_accuracy(train_svm(m, y, hard_linear(10)), m, y) <= 0.75);
    auto rbf = hard_linear(100);
    rbf.kernel = {KernelKind::rbf, 2.0};
    CHECK(training_accuracy(train_svm(m, y, rbf), m, y) == 1.0);
}

TEST_CASE("support vectors sit on the margin and are classified correctly")
{
    Rng rng(4);
    const auto [x, y] = oracle::separable_set(rng, 30, 0.5);
    const auto m = make_feature_matrix(x);
    const auto c = hard_linear(100);
    const auto s = train_svm(m, y, c);
    for (Index k = 0; k < s.alpha.size(); ++k) {
        const double cap = s.cost * (s.y(k) > 0 ? s.weights.positive : s.weights.negative);
        const RowVector sv = s.support_vectors.row(k);
        if (s.alpha(k) < cap - 1e-9) CHECK(s.y(k) * margin(s, sv) == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(decide(s, sv) == static_cast<int>(s.y(k)));
    }
}

TEST_CASE("dual feasibility, box and KKT over random problems")
{
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        Rng rng(seed);
        const auto [m, y] = noisy_set(rng);
        SvmConfig c;
        c.kernel = {seed % 2 ? KernelKind::rbf : KernelKind::linear, 0.5};
        c.cost = rng.uniform(0.1, 10.0);
        c.class_weights = ClassWeights{rng.uniform(0.5, 2.0), rng.uniform(0.5, 4.0)};
        c.seed = seed;
        const auto s = train_svm(m, y, c);
        REQUIRE(s.converged);
        CHECK(std::abs(s.alpha.dot(s.y)) <= 1e-6);
        for (Index k = 0; k < s.alpha.size(); ++k) {
            const double cap = c.cost * (s.y(k) > 0 ? c.class_weights->positive : c.class_weights->negative);
            CHECK(s.alpha(k) > 0);
            CHECK(s.alpha(k) <= cap + 1e-12);
        }
        CHECK(kkt_residuals(s, m, y).maxCoeff() <= c.tolerance);
    }
}

TEST_CASE("dual objective never decreases")
{
    Rng rng(12);
    const auto [m, y] = noisy_set(rng);
    SvmConfig c;
    c.kernel = {KernelKind::rbf, 1.0};
    c.track_objective = true;
    const auto s = train_svm(m, y, c);
    REQUIRE(s.objective_history.size() > 1);
    for (std::size_t i = 1; i < s.objective_history.size(); ++i) {
        CHECK(s.objective_history[i] >= s.objective_history[i - 1] - 1e-9);
    }
    CHECK(s.objective_history.back() == doctest::Approx(dual_objective(s)).epsilon(1e-9));
}

TEST_CASE("larger positive weight trades false negatives for false positives")
{
    Rng rng(6);
    const auto [m, y] = noisy_set(rng);
    SvmConfig c;
    c.kernel = {KernelKind::linear};
    c.class_weights = ClassWeights{1, 1};
    const auto plain = decide(train_svm(m, y, c), m);
    c.class_weights = ClassWeights{1, 10};
    const auto weighted = decide(train_svm(m, y, c), m);
    CHECK((weighted.array() == 1).count() >= (plain.array() == 1).count());
}

TEST_CASE("balanced weights")
{
    Labels y(4);
    y << 1, -1, -1, -1;
    const auto w = balanced_weights(y);
    CHECK(w.positive == doctest::Approx(2.0));
    CHECK(w.negative == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("training errors")
{
    const auto m = column({1.0, 2.0});
    CHECK_THROWS_AS(train_svm(m, Labels::Ones(2), {}), Error);
    auto bad = column({1.0, std::nan("")});
    Labels y(2);
    y << 1, -1;
    CHECK_THROWS_AS(train_svm(bad, y, {}), Error);
}

TEST_CASE("one-class nu property on a gaussian cluster")
{
    Rng rng(21);
    Matrix x(500, 2);
    for (Index i = 0; i < 500; ++i) x.row(i) << rng.normal(), rng.normal();
    const auto m = make_feature_matrix(x);
    OneClassConfig c;
    c.kernel = {KernelKind::rbf, 0.5};
    c.nu = 0.05;
    const auto s = train_one_class(m, c);
    CHECK(s.alpha.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.alpha.maxCoeff() <= 1.0 / (0.05 * 500) + 1e-12);
    const double outliers = static_cast<double>((one_class_decide(s, m).array() == -1).count()) / 500.0;
    CHECK(outliers >= 0.0);
    CHECK(outliers <= 0.10);
    CHECK(one_class_decide(s, RowVector(RowVector::Constant(2, 10.0))) == -1);
    CHECK_THROWS_AS(train_one_class(make_feature_matrix(Matrix(0, 2)), c), Error);
}

TEST_CASE("grid search of one config returns it")
{
    const auto m = column({-3, -2, -1, -4, 1, 2, 3, 4});
    Labels y(8);
    y << -1, -1, -1, -1, 1, 1, 1, 1;
    const auto r = grid_search(m, y, {hard_linear(5)}, 2, 0);
    CHECK(r.best_index == 0);
    CHECK(r.best == hard_linear(5));
}

TEST_CASE("grid search prefers the separating config")
{
    // positives inside the unit disc, negatives on a ring of radius 3
    const Index n = 12;
    Matrix x(2 * n, 2);
    Labels y(2 * n);
    for (Index i = 0; i < n; ++i) {
        const double t = 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        const double r = 0.3 + 0.05 * static_cast<double>(i % 3);
        x.row(i) << r * std::cos(t), r * std::sin(t);
        x.row(n + i) << 3 * std::cos(t + 0.2), 3 * std::sin(t + 0.2);
        y(i) = 1;
        y(n + i) = -1;
    }
    auto rbf = hard_linear(100);
    rbf.kernel = {KernelKind::rbf, 1.0};
    const auto r = grid_search(make_feature_matrix(x), y, {hard_linear(100), rbf}, 3, 5);
    CHECK(r.best_index == 1);
    CHECK(r.mean_f1[1] == 1.0);
    CHECK(r.mean_f1[0] < 1.0);
}

TEST_CASE("grid search on a hand-evaluated ten-point instance")
{
    // rows 0-4 negative, 5-9 positive
    const auto m = column({-5, -4, -3, -2, 1.5, 1, 2.5, 3, 4, 5});
    Labels y(10);
    y << -1, -1, -1, -1, -1, 1, 1, 1, 1, 1;
    REQUIRE(stratified_kfold(y, 2, 1) == std::vector<int>{0, 0, 1, 0, 1, 0, 1, 0, 1, 0});
    // fold 0 = {-5,-4,-2 | 1,3,5}, fold 1 = {-3,1.5 | 2.5,4}
    // test fold 0: train on fold 1, hard margin at (1.5+2.5)/2 = 2; x=1 is a
    //   false negative -> tp 2, fn 1, fp 0 -> F1 = 4/5
    // test fold 1: train on fold 0, margin at (-2+1)/2 = -0.5; x=1.5 is a
    //   false positive -> tp 2, fp 1, fn 0 -> F1 = 4/5
    const auto r = grid_search(m, y, {hard_linear(1000), hard_linear(10)}, 2, 1);
    for (std::size_t g = 0; g < 2; ++g) {
        CHECK(r.fold_f1[g][0] == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(r.fold_f1[g][1] == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(r.mean_f1[g] == doctest::Approx(0.8).epsilon(1e-12));
    }
    // equal scores: the lower C wins
    CHECK(r.best_index == 1);
}

TEST_CASE("one-vs-rest")
{
    Matrix x(9, 1);
    x << 0, 0.2, 0.4, 5, 5.2, 5.4, 10, 10.2, 10.4;
    Labels y(9);
    y << 0, 0, 0, 1, 1, 1, 2, 2, 2;
    SvmConfig c;
    c.kernel = {KernelKind::rbf, 0.5};
    c.cost = 10;
    const auto m = make_feature_matrix(x);
    const auto model = train_one_vs_rest(m, y, c);
    CHECK(model.classes == std::vector<int>{0, 1, 2});
    CHECK(predict_one_vs_rest(model, m) == y);
}

TEST_CASE("svm json round trip")
{
    Rng rng(2);
    const auto [m, y] = noisy_set(rng);
    SvmConfig c;
    c.kernel = {KernelKind::rbf, std::nullopt};
    const auto s = train_svm(m, y, c);
    CHECK(s.kernel.gamma.has_value());
    const auto back = svm_from_json(to_json(s));
    CHECK(decide(back, m) == decide(s, m));
    CHECK(svm_config_from_json(to_json(c)) == c);
}
