#include "decoupler/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "decoupler/parallel.hpp"
#include "decoupler/rng.hpp"

namespace decoupler::dynamics {

using sequences::PulseSequence;

double BlochVector::norm() const { return std::sqrt(rx * rx + ry * ry + rz * rz); }

DensityMatrix::DensityMatrix() : m_(Eigen::Matrix2cd::Identity() * 0.5) {}

DensityMatrix::DensityMatrix(const Eigen::Matrix2cd& m) : m_(m) {}

DensityMatrix DensityMatrix::from_bloch(const BlochVector& r)
{
    using C = std::complex<double>;
    Eigen::Matrix2cd m;
    m << C(1.0 + r.rz, 0.0), C(r.rx, -r.ry),
         C(r.rx, r.ry),      C(1.0 - r.rz, 0.0);
    return DensityMatrix(0.5 * m);
}

DensityMatrix DensityMatrix::pure(const Eigen::Vector2cd& psi)
{
    return DensityMatrix(psi * psi.adjoint());
}

BlochVector DensityMatrix::bloch() const
{
    return {2.0 * m_(1, 0).real(), 2.0 * m_(1, 0).imag(), (m_(0, 0) - m_(1, 1)).real()};
}

void DensityMatrix::check() const
{
    const auto tr = m_.trace();
    if (std::abs(tr - 1.0) > 1e-12) throw std::invalid_argument(fmt::format("density matrix trace {} != 1", tr.real()));
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("density matrix is not Hermitian");
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m_);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::invalid_argument(fmt::format("density matrix has negative eigenvalue {}", es.eigenvalues().minCoeff()));
}

void PulseErrorModel::check() const
{
    for (double e : {eps_x, eps_y})
        if (!(std::abs(e) < 0.5)) throw std::invalid_argument(fmt::format("pulse angle error {} outside (-0.5, 0.5)", e));
    for (double t : {tilt_x, tilt_y})
        if (!(std::abs(t) < std::numbers::pi / 4))
            throw std::invalid_argument(fmt::format("pulse axis tilt {} outside (-pi/4, pi/4)", t));
}

BlochVector bloch_of(InputState s)
{
    switch (s) {
    case InputState::Zero: return {0.0, 0.0, 1.0};
    case InputState::One: return {0.0, 0.0, -1.0};
    case InputState::X: return {1.0, 0.0, 0.0};
    case InputState::Y: return {0.0, 1.0, 0.0};
    }
    return {};
}

Eigen::Vector2cd ket_of(InputState s)
{
    using C = std::complex<double>;
    const double h = std::sqrt(0.5);
    switch (s) {
    case InputState::Zero: return {C(1, 0), C(0, 0)};
    case InputState::One: return {C(0, 0), C(1, 0)};
    case InputState::X: return {C(h, 0), C(h, 0)};
    case InputState::Y: return {C(h, 0), C(0, h)};
    }
    return {};
}

std::string_view label_of(InputState s)
{
    switch (s) {
    case InputState::Zero: return "0";
    case InputState::One: return "1";
    case InputState::X: return "x";
    case InputState::Y: return "y";
    }
    return "?";
}

InputState input_state_from_label(std::string_view label)
{
    if (label == "0") return InputState::Zero;
    if (label == "1") return InputState::One;
    if (label == "x") return InputState::X;
    if (label == "y") return InputState::Y;
    throw std::invalid_argument(fmt::format("unknown input state '{}' (expected 0, 1, x or y)", label));
}

Eigen::Vector2cd ket_from_bloch(const BlochVector& r)
{
    if (std::abs(r.norm() - 1.0) > 1e-9) throw std::invalid_argument("ket_from_bloch: Bloch vector is not a pure state");
    const double theta = std::acos(std::clamp(r.rz, -1.0, 1.0));
    const double phi = std::atan2(r.ry, r.rx);
    return {std::complex<double>(std::cos(theta / 2), 0.0), std::polar(std::sin(theta / 2), phi)};
}

std::vector<double> trajectory_grid(const PulseSequence& seq, bool exact, double fine_dt)
{
    auto edges = sequences::interval_edges(seq);
    if (exact) return edges;
    if (!(fine_dt > 0.0)) throw std::invalid_argument("trajectory_grid: fine_dt must be positive");
    std::vector<double> grid{edges.front()};
    for (std::size_t i = 1; i < edges.size(); ++i) {
        const double a = edges[i - 1];
        const double b = edges[i];
        const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / fine_dt)));
        for (std::size_t k = 1; k < steps; ++k) grid.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(steps));
        grid.push_back(b);
    }
    return grid;
}

namespace {

// Walks the grid intervals inside [0, T], calling on_interval(increment) for
// the field phase of each interval and on_pulse(pulse) when a pulse time is
// reached. Grid points must coincide with pulse times.
template <class OnInterval, class OnPulse>
void walk(const bath::BathTrajectory& traj, const PulseSequence& seq, OnInterval&& on_interval, OnPulse&& on_pulse)
{
    const auto& ts = traj.times;
    if (ts.size() != traj.values.size() || ts.empty())
        throw std::invalid_argument("trajectory times/values length mismatch");
    if (traj.integrals && traj.integrals->size() + 1 != ts.size())
        throw std::invalid_argument("trajectory integrals length mismatch");
    const double T = seq.total_time;
    const double tol = 1e-9 * std::max(1.0, T);
    if (ts.front() > tol || ts.back() < T - tol)
        throw std::invalid_argument(fmt::format("trajectory grid [{}, {}] does not cover [0, {}]", ts.front(), ts.back(), T));

    std::size_t next_pulse = 0;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const double a = ts[i];
        const double b = ts[i + 1];
        if (b <= tol) continue;
        if (a >= T - tol) break;
        if (a < -tol || b > T + tol)
            throw std::invalid_argument("trajectory grid straddles the sequence boundary");
        if (next_pulse < seq.pulses.size() && seq.pulses[next_pulse].time < b - tol && seq.pulses[next_pulse].time > a + tol)
            throw std::invalid_argument(fmt::format("pulse at t={} is not on the trajectory grid", seq.pulses[next_pulse].time));
        const double inc = traj.integrals ? (*traj.integrals)[i] : 0.5 * (b - a) * (traj.values[i] + traj.values[i + 1]);
        on_interval(inc);
        if (next_pulse < seq.pulses.size() && std::abs(seq.pulses[next_pulse].time - b) <= tol) {
            on_pulse(seq.pulses[next_pulse]);
            ++next_pulse;
        }
    }
    if (next_pulse != seq.pulses.size())
        throw std::invalid_argument(fmt::format("pulse at t={} is not on the trajectory grid", seq.pulses[next_pulse].time));
}

// Rodrigues rotation of r by `angle` about unit axis (nx, ny, nz).
BlochVector rotate(const BlochVector& r, double nx, double ny, double nz, double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double d = (nx * r.rx + ny * r.ry + nz * r.rz) * (1.0 - c);
    return {r.rx * c + (ny * r.rz - nz * r.ry) * s + nx * d,
            r.ry * c + (nz * r.rx - nx * r.rz) * s + ny * d,
            r.rz * c + (nx * r.ry - ny * r.rx) * s + nz * d};
}

BlochVector rotate_z(const BlochVector& r, double phi)
{
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    return {r.rx * c - r.ry * s, r.rx * s + r.ry * c, r.rz};
}

BlochVector apply_pulse(const BlochVector& r, const sequences::Pulse& pulse, const PulseErrorModel& err)
{
    const bool x_family = std::abs(std::cos(pulse.axis)) >= std::abs(std::sin(pulse.axis));
    const double eps = x_family ? err.eps_x : err.eps_y;
    const double tilt = x_family ? err.tilt_x : err.tilt_y;
    const double az = pulse.axis + tilt;
    return rotate(r, std::cos(az), std::sin(az), 0.0, pulse.nominal_angle * (1.0 + eps));
}

} // namespace

double accumulate_phase(const bath::BathTrajectory& traj, const PulseSequence& seq)
{
    double phase = 0.0;
    double sign = 1.0;
    walk(traj, seq, [&](double inc) { phase += sign * inc; }, [&](const sequences::Pulse&) { sign = -sign; });
    return phase;
}

BlochVector propagate(const bath::BathTrajectory& traj, const PulseSequence& seq, const PulseErrorModel& err,
                      const BlochVector& initial)
{
    BlochVector r = initial;
    double pending = 0.0;  // consecutive field increments commute; rotate once per free interval
    walk(traj, seq, [&](double inc) { pending += inc; },
         [&](const sequences::Pulse& pulse) {
             r = rotate_z(r, pending);
             pending = 0.0;
             r = apply_pulse(r, pulse, err);
         });
    return rotate_z(r, pending);
}

BlochVector ideal_final_state(const PulseSequence& seq, const BlochVector& initial)
{
    BlochVector r = initial;
    for (const auto& pulse : seq.pulses) r = apply_pulse(r, pulse, PulseErrorModel{});
    return r;
}

namespace {

void check_ensemble(const bath::BathParams& p, const PulseSequence& seq, const McOptions& opts)
{
    p.check();
    sequences::require_valid(seq);
    if (opts.trajectories < 2) throw std::invalid_argument("ensemble needs at least 2 trajectories");
}

double fine_step(const bath::BathParams& p, const McOptions& opts)
{
    return opts.fine_dt > 0.0 ? opts.fine_dt : p.tau_c / 1000.0;
}

} // namespace

EnsembleResult coherence(const bath::BathParams& p, const PulseSequence& seq, const McOptions& opts)
{
    check_ensemble(p, seq, opts);
    const auto grid = trajectory_grid(seq, opts.exact_integrals, fine_step(p, opts));
    const auto m = ensemble_moments<1>(opts.trajectories, opts.threads, [&](std::size_t i) {
        const auto traj = bath::sample_trajectory(p, grid, substream_seed(opts.seed, i), opts.exact_integrals);
        return std::array<double, 1>{std::cos(accumulate_phase(traj, seq))};
    });
    return {m.mean[0], m.std_error[0], m.count};
}

StateEstimate ensemble_state(const bath::BathParams& p, const PulseSequence& seq, const PulseErrorModel& err,
                             const BlochVector& initial, const McOptions& opts)
{
    check_ensemble(p, seq, opts);
    err.check();
    if (initial.norm() > 1.0 + 1e-9) throw std::invalid_argument("initial Bloch vector outside the Bloch sphere");
    const auto grid = trajectory_grid(seq, opts.exact_integrals, fine_step(p, opts));
    const auto m = ensemble_moments<3>(opts.trajectories, opts.threads, [&](std::size_t i) {
        const auto traj = bath::sample_trajectory(p, grid, substream_seed(opts.seed, i), opts.exact_integrals);
        const auto r = propagate(traj, seq, err, initial);
        return std::array<double, 3>{r.rx, r.ry, r.rz};
    });
    StateEstimate out;
    out.mean = {m.mean[0], m.mean[1], m.mean[2]};
    out.rho = DensityMatrix::from_bloch(out.mean);
    for (std::size_t k = 0; k < 3; ++k) out.components[k] = {m.mean[k], m.std_error[k], m.count};
    return out;
}

EnsembleResult fidelity(const bath::BathParams& p, const PulseSequence& seq, const PulseErrorModel& err,
                        const BlochVector& initial, const McOptions& opts)
{
    check_ensemble(p, seq, opts);
    err.check();
    if (std::abs(initial.norm() - 1.0) > 1e-9) throw std::invalid_argument("fidelity: initial state must be pure");
    const auto target = ideal_final_state(seq, initial);
    const auto grid = trajectory_grid(seq, opts.exact_integrals, fine_step(p, opts));
    const auto m = ensemble_moments<1>(opts.trajectories, opts.threads, [&](std::size_t i) {
        const auto traj = bath::sample_trajectory(p, grid, substream_seed(opts.seed, i), opts.exact_integrals);
        return std::array<double, 1>{0.5 * (1.0 + propagate(traj, seq, err, initial).dot(target))};
    });
    return {m.mean[0], m.std_error[0], m.count};
}

double state_fidelity(const DensityMatrix& rho, const Eigen::Vector2cd& ideal)
{
    if (std::abs(ideal.norm() - 1.0) > 1e-9) throw std::invalid_argument("state_fidelity: ideal state is not normalized");
    const double f = (ideal.adjoint() * rho.matrix() * ideal)(0, 0).real();
    return std::clamp(f, 0.0, 1.0);
}

double ramsey_signal(const bath::BathParams& p, double detuning, double hyperfine_splitting, double t)
{
    double lines = 0.0;
    for (int m = -1; m <= 1; ++m) lines += std::cos((detuning + m * hyperfine_splitting) * t);
    return std::exp(-0.5 * p.b * p.b * t * t) * lines / 3.0;
}

} // namespace decoupler::dynamics
