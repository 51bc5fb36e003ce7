#include <doctest.h>

#include <cmath>
#include <vector>

#include "locbound/rng.hpp"

using namespace locbound;

TEST_CASE("substreams are pure functions of (seed, stream, index)") {
    rng::CounterRng a(42, 7), b(42, 7);
    for (std::uint64_t i : {0ULL, 1ULL, 17ULL, 123456ULL}) {
        rng::Substream sa = a.at(i), sb = b.at(i);
        for (int k = 0; k < 16; ++k) CHECK(sa.next_u64() == sb.next_u64());
    }
}

TEST_CASE("distinct streams and indices decorrelate") {
    rng::CounterRng a(42, 7), b(42, 8);
    CHECK(a.at(0).next_u64() != b.at(0).next_u64());
    CHECK(a.at(0).next_u64() != a.at(1).next_u64());
    rng::CounterRng c(43, 7);
    CHECK(a.at(0).next_u64() != c.at(0).next_u64());
}

TEST_CASE("evaluation order does not matter") {
    rng::CounterRng a(9, 1);
    std::vector<double> forward, backward(10);
    for (int i = 0; i < 10; ++i) forward.push_back(a.at(i).uniform01());
    for (int i = 9; i >= 0; --i) backward[i] = a.at(i).uniform01();
    CHECK(forward == backward);
}

TEST_CASE("normal moments") {
    rng::CounterRng rng(1, 2);
    const int n = 200000;
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.at(i).normal();
        mean += z;
        sq += z * z;
    }
    mean /= n;
    sq /= n;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sq - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("student t variance matches dof/(dof-2)") {
    rng::CounterRng rng(5, 3);
    const int n = 400000;
    const double dof = 8.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = rng.at(i).student_t(dof);
        sq += t * t;
    }
    sq /= n;
    const double expected = dof / (dof - 2.0);
    // var(t^2) = E t^4 - (E t^2)^2; E t^4 = 3 dof^2 / ((dof-2)(dof-4))
    const double et4 = 3.0 * dof * dof / ((dof - 2.0) * (dof - 4.0));
    const double se = std::sqrt((et4 - expected * expected) / n);
    CHECK(std::abs(sq - expected) < 3.0 * se);
}

TEST_CASE("gamma mean and variance") {
    rng::CounterRng rng(11, 4);
    const int n = 200000;
    const double shape = 2.5;
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.at(i).gamma(shape);
        mean += g;
        sq += g * g;
    }
    mean /= n;
    sq = sq / n - mean * mean;
    CHECK(std::abs(mean - shape) < 0.02);
    CHECK(std::abs(sq - shape) < 0.05);
}

TEST_CASE("sphere radius and sign balance") {
    rng::Substream sub = rng::CounterRng(3, 3).at(0);
    const Eigen::VectorXd v = sub.sphere(7, 2.5);
    CHECK(v.norm() == doctest::Approx(2.5).epsilon(1e-12));
    int pos = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        if (rng::CounterRng(3, 4).at(i).sign() > 0) ++pos;
    CHECK(std::abs(pos - n / 2) < 3 * std::sqrt(n / 4.0));
}
