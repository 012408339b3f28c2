#include "hemtkit/bandsolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <limits>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hemtkit/constants.hpp"
#include "hemtkit/errors.hpp"

namespace hemtkit::band {

namespace c = hemtkit::constants;

void LayerSpec::validate() const {
    if (material != "GaN" && material != "AlGaN")
        throw ValidationError("BadLayer", "material must be GaN or AlGaN");
    if (!(thickness_nm > 0.0))
        throw ValidationError("BadLayer", "layer thickness must be positive");
    if (al_fraction < 0.0 || al_fraction > 1.0)
        throw ValidationError("BadLayer", "al_fraction must be in [0, 1]");
    if (material == "GaN" && al_fraction != 0.0)
        throw ValidationError("BadLayer", "al_fraction must be 0 for GaN");
    if (donor_doping_cm3 < 0.0 || acceptor_doping_cm3 < 0.0)
        throw ValidationError("BadLayer", "doping must be non-negative");
}

void StackProblem::validate() const {
    if (layers.empty())
        throw ValidationError("BadStack", "stack needs at least one layer");
    double thinnest = std::numeric_limits<double>::infinity();
    for (const auto& l : layers) {
        l.validate();
        thinnest = std::min(thinnest, l.thickness_nm);
    }
    if (!(grid_step_nm > 0.0))
        throw ValidationError("BadStack", "grid step must be positive");
    if (grid_step_nm > thinnest / 4.0)
        throw ValidationError("GridTooCoarse",
                              "grid step must not exceed a quarter of the thinnest layer");
    if (!(temperature_K > 0.0))
        throw ValidationError("BadStack", "temperature must be positive");
}

StackProblem load_stack(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("FileNotFound", "cannot open stack file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("BadStack", std::string("stack parse error: ") + e.what());
    }
    StackProblem p;
    p.surface_barrier_eV = j.at("surface_barrier_eV").get<double>();
    p.temperature_K = j.value("temperature_K", 300.0);
    p.grid_step_nm = j.value("grid_step_nm", 0.5);
    const std::string stats = j.value("statistics", "fermi");
    if (stats == "fermi") p.statistics = Statistics::FermiDirac;
    else if (stats == "boltzmann") p.statistics = Statistics::Boltzmann;
    else throw ValidationError("BadStack", "statistics must be 'fermi' or 'boltzmann'");
    for (const auto& jl : j.at("layers")) {
        LayerSpec l;
        l.material = jl.at("material").get<std::string>();
        l.thickness_nm = jl.at("thickness_nm").get<double>();
        l.al_fraction = jl.value("x", 0.0);
        l.donor_doping_cm3 = jl.value("nd_cm3", 0.0);
        l.acceptor_doping_cm3 = jl.value("na_cm3", 0.0);
        p.layers.push_back(std::move(l));
    }
    p.validate();
    return p;
}

void write_stack(const StackProblem& p, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "{\n  \"surface_barrier_eV\": " << fmt(p.surface_barrier_eV)
        << ",\n  \"temperature_K\": " << fmt(p.temperature_K)
        << ",\n  \"grid_step_nm\": " << fmt(p.grid_step_nm)
        << ",\n  \"statistics\": \""
        << (p.statistics == Statistics::FermiDirac ? "fermi" : "boltzmann")
        << "\",\n  \"layers\": [";
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const LayerSpec& l = p.layers[i];
        out << (i ? ",\n    " : "\n    ")
            << "{\"material\": \"" << l.material << "\", \"thickness_nm\": "
            << fmt(l.thickness_nm) << ", \"x\": " << fmt(l.al_fraction)
            << ", \"nd_cm3\": " << fmt(l.donor_doping_cm3)
            << ", \"na_cm3\": " << fmt(l.acceptor_doping_cm3) << "}";
    }
    out << "\n  ]\n}\n";
}

namespace {

double effective_dos_cm3(double mass_rel, double temperature_K) {
    // Nc = 2 (2 pi m kT / h^2)^(3/2), converted to cm^-3
    const double m = mass_rel * c::m_e;
    const double v = 2.0 * std::pow(2.0 * M_PI * m * c::kB * temperature_K /
                                        (c::h_planck * c::h_planck),
                                    1.5);
    return v * 1e-6;
}

// n/Nc for Fermi-Dirac statistics (Bednarczyk approximation of the complete
// F_1/2 integral, relative error below 0.5%).
double fermi_ratio(double eta) {
    if (eta < -60.0) return std::exp(std::max(eta, -700.0));
    const double nu = std::pow(eta, 4.0) + 50.0 +
                      33.6 * eta * (1.0 - 0.68 * std::exp(-0.17 * (eta + 1.0) * (eta + 1.0)));
    const double denom = std::exp(-std::min(eta, 700.0)) +
                         0.75 * std::sqrt(M_PI) * std::pow(nu, -0.375);
    return 1.0 / denom;
}

double boltzmann_ratio(double eta) {
    return std::exp(std::min(eta, 60.0));
}

}  // namespace

Mesh discretize(const StackProblem& problem, const MaterialTable& table) {
    problem.validate();

    Mesh mesh;
    double z = 0.0;  // nm
    for (std::size_t li = 0; li < problem.layers.size(); ++li) {
        const LayerSpec& layer = problem.layers[li];
        const MaterialParams mat = layer.material == "GaN"
                                       ? table.get("GaN")
                                       : table.algan(layer.al_fraction);
        const int nseg = static_cast<int>(std::ceil(layer.thickness_nm /
                                                    problem.grid_step_nm - 1e-12));
        if (nseg < 4)
            throw ValidationError("GridTooCoarse", "layer resolves to fewer than 4 segments");
        const double h = layer.thickness_nm / nseg;

        if (li == 0) {
            mesh.z_cm.push_back(0.0);
            mesh.band_offset_eV.push_back(mat.conduction_band_offset_vs_GaN_eV);
            mesh.mass.push_back(mat.electron_effective_mass);
            mesh.doping_cm3.push_back(layer.donor_doping_cm3 - layer.acceptor_doping_cm3);
            mesh.nc_cm3.push_back(effective_dos_cm3(mat.electron_effective_mass,
                                                    problem.temperature_K));
            mesh.sheet_charge_C_cm2.push_back(0.0);
        } else {
            // The shared interface node takes this (deeper) layer's bulk
            // properties; the polarization step becomes a bound sheet charge
            // sigma = P(above) - P(below).
            const LayerSpec& above = problem.layers[li - 1];
            const MaterialParams mat_above = above.material == "GaN"
                                                 ? table.get("GaN")
                                                 : table.algan(above.al_fraction);
            const std::size_t node = mesh.z_cm.size() - 1;
            mesh.band_offset_eV[node] = mat.conduction_band_offset_vs_GaN_eV;
            mesh.mass[node] = mat.electron_effective_mass;
            mesh.doping_cm3[node] = layer.donor_doping_cm3 - layer.acceptor_doping_cm3;
            mesh.nc_cm3[node] = effective_dos_cm3(mat.electron_effective_mass,
                                                  problem.temperature_K);
            mesh.sheet_charge_C_cm2[node] =
                (mat_above.net_polarization_C_m2 - mat.net_polarization_C_m2) * 1e-4;
            mesh.interface_nodes.push_back(node);
        }

        for (int s = 1; s <= nseg; ++s) {
            mesh.eps_F_cm.push_back(mat.relative_permittivity * c::eps0 * 1e-2);
            z += h;
            mesh.z_cm.push_back(z * 1e-7);
            mesh.band_offset_eV.push_back(mat.conduction_band_offset_vs_GaN_eV);
            mesh.mass.push_back(mat.electron_effective_mass);
            mesh.doping_cm3.push_back(layer.donor_doping_cm3 - layer.acceptor_doping_cm3);
            mesh.nc_cm3.push_back(effective_dos_cm3(mat.electron_effective_mass,
                                                    problem.temperature_K));
            mesh.sheet_charge_C_cm2.push_back(0.0);
        }
    }
    return mesh;
}

namespace {

struct DensityModel {
    // n and dn/dphi at node i for potential phi; quantum overrides replace
    // the classical response with a frozen density.
    std::function<double(std::size_t, double)> n_cm3;
    std::function<double(std::size_t, double)> dn_dphi;
};

DensityModel classical_density(const Mesh& mesh, const StackProblem& problem) {
    const double kT = c::kB * problem.temperature_K / c::q;  // eV
    const bool fermi = problem.statistics == Statistics::FermiDirac;
    auto ratio = [fermi](double eta) {
        return fermi ? fermi_ratio(eta) : boltzmann_ratio(eta);
    };
    DensityModel m;
    m.n_cm3 = [&mesh, kT, ratio](std::size_t i, double phi) {
        const double eta = (phi - mesh.band_offset_eV[i]) / kT;
        return mesh.nc_cm3[i] * ratio(eta);
    };
    m.dn_dphi = [&mesh, kT, ratio](std::size_t i, double phi) {
        const double eta = (phi - mesh.band_offset_eV[i]) / kT;
        const double d = 1e-5;
        return mesh.nc_cm3[i] * (ratio(eta + d) - ratio(eta - d)) / (2.0 * d * kT);
    };
    return m;
}

// Thomas solve of the tridiagonal system (a: sub, b: diag, c: super).
void tridiag_solve(std::vector<double>& a, std::vector<double>& b,
                   std::vector<double>& d, std::vector<double>& rhs) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * d[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - d[i] * rhs[i + 1]) / b[i];
}

struct NewtonOutcome {
    std::vector<double> phi;
    bool converged = false;
    int iterations = 0;
    double residual_V = 0.0;
    std::vector<double> history;
};

// Damped Newton on the box-integrated Poisson equation. Node 0 is Dirichlet
// (Schottky pinning), the back contact is zero-field Neumann.
NewtonOutcome newton_poisson(const Mesh& mesh, const DensityModel& density,
                             double phi_surface, std::vector<double> phi,
                             double tolerance_V, int max_iterations) {
    const std::size_t n = mesh.z_cm.size();
    phi[0] = phi_surface;

    auto residual = [&](const std::vector<double>& f, std::vector<double>& F) {
        F.assign(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) {
            const double h_l = mesh.z_cm[i] - mesh.z_cm[i - 1];
            double flux = -mesh.eps_F_cm[i - 1] * (f[i] - f[i - 1]) / h_l;
            double w = h_l / 2.0;
            if (i + 1 < n) {
                const double h_r = mesh.z_cm[i + 1] - mesh.z_cm[i];
                flux += mesh.eps_F_cm[i] * (f[i + 1] - f[i]) / h_r;
                w += h_r / 2.0;
            }
            const double rho = c::q * (mesh.doping_cm3[i] - density.n_cm3(i, f[i]));
            F[i] = flux + rho * w + mesh.sheet_charge_C_cm2[i];
        }
    };

    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };

    NewtonOutcome out;
    std::vector<double> F(n), Ft(n), trial(n);
    residual(phi, F);
    double fnorm = max_abs(F);

    for (int it = 0; it < max_iterations; ++it) {
        // Tridiagonal Jacobian over nodes 1..n-1 (node 0 fixed).
        const std::size_t m = n - 1;
        std::vector<double> sub(m, 0.0), diag(m, 0.0), sup(m, 0.0), rhs(m, 0.0);
        for (std::size_t i = 1; i < n; ++i) {
            const std::size_t r = i - 1;
            const double h_l = mesh.z_cm[i] - mesh.z_cm[i - 1];
            double w = h_l / 2.0;
            diag[r] = -mesh.eps_F_cm[i - 1] / h_l;
            if (r > 0) sub[r] = mesh.eps_F_cm[i - 1] / h_l;
            if (i + 1 < n) {
                const double h_r = mesh.z_cm[i + 1] - mesh.z_cm[i];
                diag[r] -= mesh.eps_F_cm[i] / h_r;
                sup[r] = mesh.eps_F_cm[i] / h_r;
                w += h_r / 2.0;
            }
            diag[r] -= c::q * density.dn_dphi(i, phi[i]) * w;
            rhs[r] = -F[i];
        }
        tridiag_solve(sub, diag, sup, rhs);

        const double step_norm = max_abs(rhs);
        if (!std::isfinite(step_norm))
            throw NumericError("NonFiniteResidual", "Newton step is not finite");

        // Step-halving line search on the residual max-norm.
        double lambda = 1.0;
        double accepted_norm = fnorm;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            trial = phi;
            for (std::size_t i = 1; i < n; ++i) trial[i] += lambda * rhs[i - 1];
            residual(trial, Ft);
            const double fn = max_abs(Ft);
            if (std::isfinite(fn) && (fn < fnorm || half == 39)) {
                phi = trial;
                F = Ft;
                accepted_norm = fn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted)
            throw NumericError("NonFiniteResidual", "line search failed");
        fnorm = accepted_norm;

        const double update = lambda * step_norm;
        out.history.push_back(update);
        out.iterations = it + 1;
        out.residual_V = update;
        if (update < tolerance_V) {
            out.converged = true;
            break;
        }
    }
    out.phi = std::move(phi);
    return out;
}

std::vector<double> initial_guess(const Mesh& mesh, const StackProblem& problem,
                                  double phi_surface) {
    // Linear ramp from the pinned surface to the neutral potential of the
    // deepest layer (or mid-gap-ish for undoped material).
    const double kT = c::kB * problem.temperature_K / c::q;
    const std::size_t n = mesh.z_cm.size();
    const double nd = std::max(mesh.doping_cm3[n - 1], 1e10);
    const double phi_bulk =
        mesh.band_offset_eV[n - 1] - kT * std::log(mesh.nc_cm3[n - 1] / nd);
    std::vector<double> phi(n);
    const double zl = mesh.z_cm[n - 1];
    for (std::size_t i = 0; i < n; ++i) {
        const double t = zl > 0.0 ? mesh.z_cm[i] / zl : 0.0;
        phi[i] = phi_surface + t * (phi_bulk - phi_surface);
    }
    return phi;
}

double integrate_sheet_density(const Mesh& mesh, const std::vector<double>& n_cm3) {
    double ns = 0.0;
    const std::size_t n = mesh.z_cm.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double h = mesh.z_cm[i] - mesh.z_cm[i - 1];
        ns += 0.5 * (n_cm3[i] + n_cm3[i - 1]) * h;
    }
    return ns;
}

BandSolution pack_solution(const Mesh& mesh, const NewtonOutcome& outcome,
                           const std::vector<double>& n_cm3) {
    BandSolution s;
    const std::size_t n = mesh.z_cm.size();
    s.z_nm.resize(n);
    s.ec_eV.resize(n);
    s.potential_V = outcome.phi;
    s.electron_density_cm3 = n_cm3;
    for (std::size_t i = 0; i < n; ++i) {
        s.z_nm[i] = mesh.z_cm[i] * 1e7;
        s.ec_eV[i] = mesh.band_offset_eV[i] - outcome.phi[i];
    }
    s.sheet_density_cm2 = integrate_sheet_density(mesh, n_cm3);
    s.converged = outcome.converged;
    s.iterations = outcome.iterations;
    s.residual_V = outcome.residual_V;
    s.residual_history = outcome.history;
    return s;
}

}  // namespace

BandSolution solve_poisson_equilibrium(const StackProblem& problem,
                                       const MaterialTable& table,
                                       double tolerance_V, int max_iterations) {
    const Mesh mesh = discretize(problem, table);
    const DensityModel density = classical_density(mesh, problem);
    const double phi_surface = mesh.band_offset_eV[0] - problem.surface_barrier_eV;

    NewtonOutcome outcome =
        newton_poisson(mesh, density, phi_surface,
                       initial_guess(mesh, problem, phi_surface), tolerance_V,
                       max_iterations);

    std::vector<double> n(mesh.z_cm.size());
    for (std::size_t i = 0; i < n.size(); ++i)
        n[i] = density.n_cm3(i, outcome.phi[i]);
    BandSolution s = pack_solution(mesh, outcome, n);
    if (!s.converged && s.residual_V > 1e-3)
        throw NumericError("NotConverged", "Poisson iteration did not converge");
    return s;
}

SchrodingerResult solve_schrodinger(const std::vector<double>& ec_eV,
                                    const std::vector<double>& z_nm,
                                    const std::vector<double>& mass, int k) {
    const std::size_t n = z_nm.size();
    if (n < 3 || ec_eV.size() != n || mass.size() != n)
        throw ValidationError("BadGrid", "Schrodinger needs matching grids of length >= 3");
    if (k < 1)
        throw ValidationError("BadArgument", "k must be >= 1");
    const std::size_t ni = n - 2;  // interior nodes, hard walls at the ends
    if (static_cast<std::size_t>(k) > ni) k = static_cast<int>(ni);

    // hbar^2/(2 m_e) = 3.80998e-20 eV*m^2; grid in meters.
    const double coef = c::hbar * c::hbar / (2.0 * c::m_e * c::q);
    std::vector<double> z_m(n), w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z_m[i] = z_nm[i] * 1e-9;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) w[i] += 0.5 * (z_m[i] - z_m[i - 1]);
        if (i + 1 < n) w[i] += 0.5 * (z_m[i + 1] - z_m[i]);
    }

    // Generalized problem A psi = E W psi, symmetrized by W^(-1/2).
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<long>(ni), static_cast<long>(ni));
    auto t_coef = [&](std::size_t i) {  // coupling across segment i..i+1
        const double h = z_m[i + 1] - z_m[i];
        const double m_half = 0.5 * (mass[i] + mass[i + 1]);
        return coef / (m_half * h);
    };
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const long r = static_cast<long>(i - 1);
        const double tl = t_coef(i - 1), tr = t_coef(i);
        const double diag = (tl + tr) / w[i] + ec_eV[i];
        B(r, r) = diag;
        if (i + 2 < n) {
            const double off = -tr / std::sqrt(w[i] * w[i + 1]);
            B(r, r + 1) = off;
            B(r + 1, r) = off;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
    if (eig.info() != Eigen::Success)
        throw NumericError("EigSolverFailure", "eigenvalue iteration failed");

    SchrodingerResult result;
    for (int s = 0; s < k; ++s) {
        result.energies_eV.push_back(eig.eigenvalues()(s));
        std::vector<double> psi(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i)
            psi[i] = eig.eigenvectors()(static_cast<long>(i - 1), s) / std::sqrt(w[i]);
        // L2-normalize on the grid (trapezoid weights, z in nm -> psi in nm^-1/2
        // is avoided; keep meters so |psi|^2 integrates to 1 over meters).
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += psi[i] * psi[i] * w[i];
        norm = std::sqrt(norm);
        double sign = 1.0;
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(psi[i]));
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(psi[i]) > 1e-6 * peak) { sign = psi[i] > 0.0 ? 1.0 : -1.0; break; }
        for (double& v : psi) v *= sign / norm;
        result.wavefunctions.push_back(std::move(psi));
    }
    return result;
}

BandSolution solve_self_consistent(const StackProblem& problem,
                                   const MaterialTable& table, bool quantum,
                                   double tolerance_V, double mixing,
                                   int max_outer) {
    if (!quantum)
        return solve_poisson_equilibrium(problem, table, tolerance_V);

    const Mesh mesh = discretize(problem, table);
    const DensityModel classical = classical_density(mesh, problem);
    const double phi_surface = mesh.band_offset_eV[0] - problem.surface_barrier_eV;
    const double kT = c::kB * problem.temperature_K / c::q;  // eV
    const std::size_t n = mesh.z_cm.size();

    // Quantum window: around the first positively charged interface
    // (10 nm above, 40 nm below), else the whole stack.
    std::size_t q_lo = 0, q_hi = n - 1;
    for (std::size_t node : mesh.interface_nodes) {
        if (mesh.sheet_charge_C_cm2[node] > 0.0) {
            const double z_if = mesh.z_cm[node];
            while (q_lo + 1 < node && mesh.z_cm[q_lo] < z_if - 10e-7) ++q_lo;
            q_hi = node;
            while (q_hi + 1 < n && mesh.z_cm[q_hi] < z_if + 40e-7) ++q_hi;
            break;
        }
    }

    NewtonOutcome outcome =
        newton_poisson(mesh, classical, phi_surface,
                       initial_guess(mesh, problem, phi_surface), tolerance_V, 200);

    std::vector<double> n_mixed(n);
    for (std::size_t i = 0; i < n; ++i) n_mixed[i] = classical.n_cm3(i, outcome.phi[i]);
    double ns_prev = integrate_sheet_density(mesh, n_mixed);

    std::vector<double> bound_energies;
    bool outer_converged = false;

    for (int outer = 0; outer < max_outer; ++outer) {
        // Schrodinger on the current band profile inside the window.
        std::vector<double> ec_w, z_w, m_w;
        for (std::size_t i = q_lo; i <= q_hi; ++i) {
            ec_w.push_back(mesh.band_offset_eV[i] - outcome.phi[i]);
            z_w.push_back(mesh.z_cm[i] * 1e7);
            m_w.push_back(mesh.mass[i]);
        }
        const SchrodingerResult sch = solve_schrodinger(ec_w, z_w, m_w, 5);
        bound_energies = sch.energies_eV;

        // Occupied quantum density: n_q(z) = sum |psi_i|^2 * N2D_i with the
        // 2D DOS of the wavefunction-averaged mass.
        std::vector<double> n_q(q_hi - q_lo + 1, 0.0);
        for (std::size_t s = 0; s < sch.energies_eV.size(); ++s) {
            const auto& psi = sch.wavefunctions[s];
            double m_avg = 0.0, norm = 0.0;
            for (std::size_t i = 0; i < psi.size(); ++i) {
                double w = 0.0;
                if (i > 0) w += 0.5 * (z_w[i] - z_w[i - 1]);
                if (i + 1 < psi.size()) w += 0.5 * (z_w[i + 1] - z_w[i]);
                m_avg += psi[i] * psi[i] * w * m_w[i];
                norm += psi[i] * psi[i] * w;
            }
            m_avg /= norm;
            const double g2d = m_avg * c::m_e * c::kB * problem.temperature_K /
                               (M_PI * c::hbar * c::hbar) * 1e-4;  // cm^-2
            const double occ = std::log1p(std::exp(std::min(-sch.energies_eV[s] / kT, 700.0)));
            const double n2d = g2d * occ;
            for (std::size_t i = 0; i < psi.size(); ++i)
                n_q[i] += psi[i] * psi[i] * 1e-2 * n2d;  // 1/m -> 1/cm, times cm^-2
        }

        for (std::size_t i = q_lo; i <= q_hi; ++i)
            n_mixed[i] = mixing * n_q[i - q_lo] + (1.0 - mixing) * n_mixed[i];

        // Poisson with the quantum density inside the window. The density is
        // frozen at n_mixed but carries a local exponential response to the
        // potential update (predictor-corrector); at the fixed point
        // phi == phi_prev and the density is exactly the mixed one.
        const std::vector<double> phi_prev = outcome.phi;
        DensityModel hybrid;
        hybrid.n_cm3 = [&, phi_prev](std::size_t i, double phi) {
            if (i > q_lo && i < q_hi) {
                const double arg = std::clamp((phi - phi_prev[i]) / kT, -60.0, 60.0);
                return n_mixed[i] * std::exp(arg);
            }
            return classical.n_cm3(i, phi);
        };
        hybrid.dn_dphi = [&, phi_prev](std::size_t i, double phi) {
            if (i > q_lo && i < q_hi) return hybrid.n_cm3(i, phi) / kT;
            return classical.dn_dphi(i, phi);
        };
        outcome = newton_poisson(mesh, hybrid, phi_surface, outcome.phi, tolerance_V, 200);
        for (std::size_t i = 0; i < n; ++i) {
            if (i > q_lo && i < q_hi)
                n_mixed[i] = hybrid.n_cm3(i, outcome.phi[i]);  // density the solve used
            else
                n_mixed[i] = classical.n_cm3(i, outcome.phi[i]);
        }

        const double ns = integrate_sheet_density(mesh, n_mixed);
        const double rel = std::abs(ns - ns_prev) / std::max(ns, 1e-30);
        ns_prev = ns;
        if (rel < 1e-6) {
            outer_converged = true;
            break;
        }
    }

    if (!outer_converged)
        throw NumericError("NotConverged", "self-consistent loop did not converge");

    BandSolution s = pack_solution(mesh, outcome, n_mixed);
    s.bound_energies_eV = bound_energies;
    return s;
}

std::vector<SweepPoint> sweep_design(const StackProblem& problem,
                                     const MaterialTable& table, SweepAxis axis,
                                     const std::vector<double>& values, int jobs) {
    if (values.size() < 2)
        throw ValidationError("BadArgument", "sweep needs at least 2 values");
    std::size_t barrier = problem.layers.size();
    for (std::size_t i = 0; i < problem.layers.size(); ++i)
        if (problem.layers[i].material == "AlGaN") { barrier = i; break; }
    if (barrier == problem.layers.size())
        throw ValidationError("NoBarrier", "sweep axis needs an AlGaN layer");

    auto solve_one = [&](double value) {
        SweepPoint pt;
        pt.value = value;
        try {
            StackProblem p = problem;
            switch (axis) {
                case SweepAxis::BarrierThickness: p.layers[barrier].thickness_nm = value; break;
                case SweepAxis::AlFraction: p.layers[barrier].al_fraction = value; break;
                case SweepAxis::Doping: p.layers[barrier].donor_doping_cm3 = value; break;
            }
            const BandSolution s = solve_poisson_equilibrium(p, table);
            pt.sheet_density_cm2 = s.sheet_density_cm2;
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        return pt;
    };

    std::vector<SweepPoint> out(values.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = solve_one(values[i]);
        return out;
    }
    std::vector<std::future<SweepPoint>> futures;
    futures.reserve(values.size());
    for (double v : values)
        futures.push_back(std::async(std::launch::async, solve_one, v));
    for (std::size_t i = 0; i < futures.size(); ++i) out[i] = futures[i].get();
    return out;
}

void write_solution_csv(const BandSolution& solution, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    out << "z_nm,ec_eV,n_cm3\n";
    char buf[128];
    for (std::size_t i = 0; i < solution.z_nm.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", solution.z_nm[i],
                      solution.ec_eV[i], solution.electron_density_cm3[i]);
        out << buf;
    }
}

void write_solution_summary(const BandSolution& solution, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "{\n  \"ns_cm2\": " << fmt(solution.sheet_density_cm2)
        << ",\n  \"converged\": " << (solution.converged ? "true" : "false")
        << ",\n  \"iterations\": " << solution.iterations
        << ",\n  \"residual_V\": " << fmt(solution.residual_V)
        << ",\n  \"bound_energies_eV\": [";
    for (std::size_t i = 0; i < solution.bound_energies_eV.size(); ++i)
        out << (i ? ", " : "") << fmt(solution.bound_energies_eV[i]);
    out << "]\n}\n";
}

}  // namespace hemtkit::band
