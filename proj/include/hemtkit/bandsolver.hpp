#pragma once

#include <string>
#include <vector>

#include "hemtkit/materials.hpp"

namespace hemtkit::band {

enum class Statistics { Boltzmann, FermiDirac };

struct LayerSpec {
    std::string material = "GaN";    // GaN | AlGaN
    double thickness_nm = 0.0;
    double al_fraction = 0.0;        // 0 for GaN
    double donor_doping_cm3 = 0.0;
    double acceptor_doping_cm3 = 0.0;

    void validate() const;
};

// Layered 1D equilibrium problem; layers ordered surface (z = 0) first.
struct StackProblem {
    std::vector<LayerSpec> layers;
    double surface_barrier_eV = 1.0;   // Schottky pinning: Ec(0) - Ef
    double temperature_K = 300.0;
    double grid_step_nm = 0.5;
    Statistics statistics = Statistics::FermiDirac;

    void validate() const;
};

StackProblem load_stack(const std::string& path);
void write_stack(const StackProblem& problem, const std::string& path);

// Discretized stack: per-node coordinates, material constants, and bound
// polarization sheet charges at the interface nodes.
struct Mesh {
    std::vector<double> z_cm;            // node positions, increasing from 0
    std::vector<double> eps_F_cm;        // permittivity of segment i..i+1 (size n-1)
    std::vector<double> band_offset_eV;  // conduction-band offset vs GaN per node
    std::vector<double> mass;            // effective mass per node (units of m_e)
    std::vector<double> doping_cm3;      // Nd - Na per node
    std::vector<double> nc_cm3;          // conduction-band effective DOS per node
    std::vector<double> sheet_charge_C_cm2;  // bound sheet charge per node
    std::vector<std::size_t> interface_nodes;
};

Mesh discretize(const StackProblem& problem, const MaterialTable& table);

struct BandSolution {
    std::vector<double> z_nm;
    std::vector<double> ec_eV;             // conduction-band edge, Ef = 0
    std::vector<double> potential_V;
    std::vector<double> electron_density_cm3;
    double sheet_density_cm2 = 0.0;
    std::vector<double> bound_energies_eV;  // empty unless the quantum path ran
    bool converged = false;
    int iterations = 0;
    double residual_V = 0.0;                // max |update| at exit
    std::vector<double> residual_history;   // max |update| per accepted step
};

// Damped-Newton solve of the equilibrium nonlinear Poisson equation with
// Dirichlet (Schottky) surface pinning and a zero-field back contact.
BandSolution solve_poisson_equilibrium(const StackProblem& problem,
                                       const MaterialTable& table,
                                       double tolerance_V = 1e-8,
                                       int max_iterations = 200);

// Lowest-k eigenpairs of the 1D single-band effective-mass Hamiltonian with
// hard-wall boundaries; wavefunctions are L2-normalized on the grid.
struct SchrodingerResult {
    std::vector<double> energies_eV;                 // ascending
    std::vector<std::vector<double>> wavefunctions;  // one per energy
};
SchrodingerResult solve_schrodinger(const std::vector<double>& ec_eV,
                                    const std::vector<double>& z_nm,
                                    const std::vector<double>& mass, int k);

// quantum == false delegates to solve_poisson_equilibrium; quantum == true
// alternates Poisson and Schrodinger with under-relaxed density mixing until
// the sheet density settles (relative change < 1e-6).
BandSolution solve_self_consistent(const StackProblem& problem,
                                   const MaterialTable& table, bool quantum,
                                   double tolerance_V = 1e-8,
                                   double mixing = 0.3,
                                   int max_outer = 300);

enum class SweepAxis { BarrierThickness, AlFraction, Doping };

struct SweepPoint {
    double value = 0.0;
    double sheet_density_cm2 = 0.0;
    bool ok = false;
    std::string error;
};

// Re-solves the stack per value of the chosen design axis (applied to the
// first AlGaN layer); failed points are flagged and the sweep continues.
std::vector<SweepPoint> sweep_design(const StackProblem& problem,
                                     const MaterialTable& table, SweepAxis axis,
                                     const std::vector<double>& values,
                                     int jobs = 1);

// CSV export: z_nm,ec_eV,n_cm3 plus a JSON summary.
void write_solution_csv(const BandSolution& solution, const std::string& path);
void write_solution_summary(const BandSolution& solution, const std::string& path);

}  // namespace hemtkit::band
