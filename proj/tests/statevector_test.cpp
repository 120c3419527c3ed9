#include "oracles.hpp"

#include <qtpnet/statevector.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qtpnet;

namespace {

void expect_amps(const Statevector& s, const std::vector<amplitude>& ref, double tol = 1e-12) {
    ASSERT_EQ(s.dim(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(s[i].real(), ref[i].real(), tol) << "i=" << i;
        EXPECT_NEAR(s[i].imag(), ref[i].imag(), tol) << "i=" << i;
    }
}

GateSpec random_gate(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, 4);
    std::uniform_int_distribution<int> qubit(0, n - 1);
    std::uniform_real_distribution<double> angle(-3.2, 3.2);
    GateSpec g;
    g.kind = static_cast<GateKind>(kind(rng));
    g.target = qubit(rng);
    g.angle = angle(rng);
    if (g.kind == GateKind::MCX || g.kind == GateKind::MCZ) {
        for (int q = 0; q < n; ++q) {
            if (q != g.target && (rng() & 1)) {
                g.controls.push_back(q);
            }
        }
    }
    return g;
}

} // namespace

TEST(Statevector, ZeroStateIsGround) {
    expect_amps(new_zero_state(1), {1.0, 0.0});
    expect_amps(new_zero_state(2), {1.0, 0.0, 0.0, 0.0});
    EXPECT_EQ(new_zero_state(3).norm_squared(), 1.0);
}

TEST(Statevector, QubitCountLimits) {
    EXPECT_THROW(new_zero_state(0), Error);
    EXPECT_THROW(new_zero_state(21), Error);
    try {
        new_zero_state(21);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
        EXPECT_NE(std::string(e.what()).find("20"), std::string::npos);
    }
}

TEST(Statevector, SingleQubitGates) {
    const double r = 1.0 / std::sqrt(2.0);
    expect_amps(apply_gate(new_zero_state(1), GateSpec::h(0)), {r, r});
    expect_amps(apply_gate(new_zero_state(1), GateSpec::x(0)), {0.0, 1.0});
    expect_amps(apply_gate(new_zero_state(1), GateSpec::ry(0, std::numbers::pi)), {0.0, 1.0});
}

TEST(Statevector, BigEndianQubitOrder) {
    // X on qubit 0 of two qubits sets the most significant bit: |10> = index 2.
    expect_amps(apply_gate(new_zero_state(2), GateSpec::x(0)), {0.0, 0.0, 1.0, 0.0});
    expect_amps(apply_gate(new_zero_state(2), GateSpec::x(1)), {0.0, 1.0, 0.0, 0.0});
}

TEST(Statevector, ControlledZFlipsOnlyAllOnes) {
    // (|10> + |11>)/sqrt2 -> (|10> - |11>)/sqrt2
    const double r = 1.0 / std::sqrt(2.0);
    auto s = Statevector::from_amplitudes(2, {0.0, 0.0, r, r});
    s.apply(GateSpec::mcz({0}, 1));
    expect_amps(s, {0.0, 0.0, r, -r});

    const auto dense = oracle::kron(oracle::proj0(), oracle::Dense::identity(2));
    auto expected = dense.apply({0.0, 0.0, r, r});
    const auto z = oracle::kron(oracle::proj1(), oracle::pauli_z()).apply({0.0, 0.0, r, r});
    for (std::size_t i = 0; i < 4; ++i) {
        expected[i] += z[i];
    }
    EXPECT_LE(oracle::max_abs_diff(expected, s.amplitudes()), 1e-15);
}

TEST(Statevector, MultiControlledX) {
    auto s = Statevector::basis(3, 0b110);
    s.apply(GateSpec::mcx({0, 1}, 2));
    EXPECT_EQ(s, Statevector::basis(3, 0b111));
    s = Statevector::basis(3, 0b100);
    s.apply(GateSpec::mcx({0, 1}, 2));
    EXPECT_EQ(s, Statevector::basis(3, 0b100));
}

TEST(Statevector, RejectsOverlappingOrOutOfRangeQubits) {
    auto s = new_zero_state(3);
    EXPECT_THROW(s.apply(GateSpec::mcx({1}, 1)), Error);
    EXPECT_THROW(s.apply(GateSpec::mcz({0, 0}, 2)), Error);
    EXPECT_THROW(s.apply(GateSpec::h(3)), Error);
    EXPECT_THROW(s.apply(GateSpec::mcx({-1}, 0)), Error);
    try {
        s.apply(GateSpec::mcx({2}, 2));
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
    }
}

TEST(Statevector, Probabilities) {
    const double r = 1.0 / std::sqrt(2.0);
    auto p = probabilities(Statevector::from_amplitudes(1, {r, r}));
    EXPECT_NEAR(p[0], 0.5, 1e-15);
    EXPECT_NEAR(p[1], 0.5, 1e-15);
    p = probabilities(Statevector::from_amplitudes(1, {1.0, 0.0}));
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], 0.0);
    p = probabilities(Statevector::from_amplitudes(1, {0.6, amplitude{0.0, 0.8}}));
    EXPECT_NEAR(p[0], 0.36, 1e-15);
    EXPECT_NEAR(p[1], 0.64, 1e-15);
}

TEST(Statevector, SampleDeterministicState) {
    const auto out = sample(Statevector::basis(1, 1), 5, 1234);
    EXPECT_EQ(out, (std::vector<basis_index>{1, 1, 1, 1, 1}));
}

TEST(Statevector, SampleUniformFrequencies) {
    auto s = new_zero_state(2);
    s.apply(GateSpec::h(0));
    s.apply(GateSpec::h(1));
    const int shots = 100000;
    const auto out = sample(s, shots, 7);
    std::array<int, 4> counts{};
    for (auto x : out) {
        ++counts[x];
    }
    for (int c : counts) {
        EXPECT_NEAR(static_cast<double>(c) / shots, 0.25, 0.01);
    }
}

TEST(Statevector, SampleIsSeeded) {
    auto s = new_zero_state(3);
    for (int q = 0; q < 3; ++q) {
        s.apply(GateSpec::ry(q, 0.3 + q));
    }
    EXPECT_EQ(sample(s, 500, 99), sample(s, 500, 99));
    EXPECT_NE(sample(s, 500, 99), sample(s, 500, 100));
    EXPECT_THROW(sample(s, 0, 1), Error);
}

TEST(StatevectorProperty, NormPreservedOverLongRandomCircuits) {
    std::mt19937_64 rng(2024);
    for (int n : {1, 4, 8, 12}) {
        auto s = new_zero_state(n);
        for (int i = 0; i < 1000; ++i) {
            s.apply(random_gate(n, rng));
        }
        EXPECT_NEAR(s.norm_squared(), 1.0, 1e-10) << "n=" << n;
    }
}

TEST(StatevectorProperty, KernelsMatchDenseMatrices) {
    std::mt19937_64 rng(11);
    for (int n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 20; ++trial) {
            const GateSpec g = random_gate(n, rng);
            const auto psi = oracle::random_state(n, rng);
            auto s = Statevector::from_amplitudes(n, psi);
            s.apply(g);
            const auto expected = oracle::dense_gate(g, n).apply(psi);
            EXPECT_LE(oracle::max_abs_diff(expected, s.amplitudes()), 1e-12) << "n=" << n;
        }
    }
}

TEST(StatevectorProperty, GateMatricesAreUnitary) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const GateSpec g = random_gate(n, rng);
        // Expand through the kernel, column by column.
        const std::size_t N = std::size_t{1} << n;
        oracle::Dense u = oracle::Dense::zeros(N);
        for (std::size_t c = 0; c < N; ++c) {
            auto col = Statevector::basis(n, c);
            col.apply(g);
            for (std::size_t r = 0; r < N; ++r) {
                u(r, c) = col[r];
            }
        }
        EXPECT_LE(u.unitarity_defect(), 1e-12);
    }
}

TEST(StatevectorProperty, BitwiseDeterminism) {
    std::mt19937_64 a(77);
    std::mt19937_64 b(77);
    auto s1 = new_zero_state(6);
    auto s2 = new_zero_state(6);
    for (int i = 0; i < 300; ++i) {
        s1.apply(random_gate(6, a));
        s2.apply(random_gate(6, b));
    }
    EXPECT_EQ(s1, s2);
    EXPECT_EQ(sample(s1, 64, 3), sample(s2, 64, 3));
}
