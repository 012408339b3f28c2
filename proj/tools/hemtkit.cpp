// hemtkit: parameter extraction from FET I-V/C-V sweeps plus a 1D
// equilibrium band solver for AlGaN/GaN stacks.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hemtkit/bandsolver.hpp"
#include "hemtkit/errors.hpp"
#include "hemtkit/extraction.hpp"
#include "hemtkit/synth.hpp"

using namespace hemtkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct SmoothingFlags {
    int window = 7;
    int poly = 2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--smooth-window", window, "smoothing window (odd sample count)");
        cmd->add_option("--smooth-poly", poly, "smoothing polynomial order");
    }
    ExtractionOptions options() const {
        ExtractionOptions o;
        o.smoothing = num::SmoothingSpec{window, poly};
        o.smoothing.validate();
        return o;
    }
};

void emit_curve_csv(const std::string& path, const std::string& header,
                    const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("IOFailure", "cannot write " + path);
    out << header << "\n";
    if (columns.empty()) return;
    const std::size_t rows = columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "," : "") << fmt17(columns[c][r]);
        out << "\n";
    }
}

void emit_transfer_plots(const SweepFamily& family, const ExtractionOptions& opt,
                         const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<double> vgs, vds, gm, logi;
    for (const auto& curve : family.curves) {
        const GmResult g = extract_gm(curve, opt.smoothing);
        for (std::size_t i = 0; i < curve.x.size(); ++i) {
            vgs.push_back(curve.x[i]);
            vds.push_back(curve.fixed_bias);
            gm.push_back(g.gm[i]);
            logi.push_back(std::log10(std::max(std::abs(curve.y[i]), 1e-300)));
        }
    }
    emit_curve_csv(dir + "/gm_vs_vgs.csv", "vgs_V,vds_V,gm_S", {vgs, vds, gm});
    emit_curve_csv(dir + "/logid_vs_vgs.csv", "vgs_V,vds_V,log10_id", {vgs, vds, logi});
}

int run_extract_transfer(const std::string& in, const std::string& meta_path,
                         const std::string& region, const std::string& out,
                         const SmoothingFlags& sm, const std::string& plots) {
    SweepMetadata meta = load_metadata(meta_path);
    if (meta.kind != SweepKind::Transfer)
        throw ValidationError("InconsistentKind", "metadata kind is not 'transfer'");
    const SweepFamily family = ingest_sweep_file(in, meta);
    ExtractionOptions opt = sm.options();
    if (region == "saturation") opt.linear_cap_V = 0.1;  // vth still needs the ohmic curve

    ExtractionReport report;
    report.device_id = meta.device_id;
    report_transfer_family(family, meta, opt, report);
    write_report(report, out);
    if (!plots.empty()) emit_transfer_plots(family, opt, plots);
    return report.any_errors() ? kExitNumeric : kExitOk;
}

int run_extract_output(const std::string& in, const std::string& meta_path,
                       const std::string& out, const SmoothingFlags& sm) {
    SweepMetadata meta = load_metadata(meta_path);
    if (meta.kind != SweepKind::Output)
        throw ValidationError("InconsistentKind", "metadata kind is not 'output'");
    const SweepFamily family = ingest_sweep_file(in, meta);
    ExtractionReport report;
    report.device_id = meta.device_id;
    report_output_family(family, meta, sm.options(), report);
    write_report(report, out);
    return report.any_errors() ? kExitNumeric : kExitOk;
}

int run_extract_cv(const std::string& in, const std::string& meta_path,
                   const std::string& out, const SmoothingFlags& sm,
                   const std::string& plots) {
    SweepMetadata meta = load_metadata(meta_path);
    if (meta.kind != SweepKind::CV)
        throw ValidationError("InconsistentKind", "metadata kind is not 'cv'");
    const SweepFamily family = ingest_sweep_file(in, meta);
    ExtractionReport report;
    report.device_id = meta.device_id;
    ChargeCurve charge;
    report_cv_curve(family, meta, sm.options(), report, &charge);
    write_report(report, out);
    if (!plots.empty()) {
        std::filesystem::create_directories(plots);
        emit_curve_csv(plots + "/q_vs_vgs.csv", "vgs_V,q_C_cm2",
                       {charge.vgs, charge.q_C_cm2});
    }
    return report.any_errors() ? kExitNumeric : kExitOk;
}

int run_mobility(const std::string& transfer_path, const std::string& cv_path,
                 const std::string& meta_path, const std::string& cv_meta_path,
                 const std::string& out, const SmoothingFlags& sm,
                 const std::string& plots) {
    SweepMetadata meta = load_metadata(meta_path);
    if (meta.kind != SweepKind::Transfer)
        throw ValidationError("InconsistentKind", "metadata kind is not 'transfer'");
    SweepMetadata cv_meta = meta;
    cv_meta.kind = SweepKind::CV;
    if (!cv_meta_path.empty()) cv_meta = load_metadata(cv_meta_path);
    const SweepFamily transfer = ingest_sweep_file(transfer_path, meta);
    const SweepFamily cv = ingest_sweep_file(cv_path, cv_meta);

    ExtractionReport report;
    report.device_id = meta.device_id;
    std::vector<MobilityCurve> curves;
    std::vector<double> curve_vds;
    report_mobility(transfer, cv, meta, sm.options(), report, &curves, &curve_vds);
    write_report(report, out);
    if (!plots.empty()) {
        std::filesystem::create_directories(plots);
        std::vector<double> vgs, vds, mu;
        for (std::size_t k = 0; k < curves.size(); ++k)
            for (std::size_t i = 0; i < curves[k].vgs.size(); ++i) {
                vgs.push_back(curves[k].vgs[i]);
                vds.push_back(curve_vds[k]);
                mu.push_back(curves[k].mu_cm2_Vs[i]);
            }
        emit_curve_csv(plots + "/mu_vs_vgs.csv", "vgs_V,vds_V,mu_cm2_Vs", {vgs, vds, mu});
    }
    return report.any_errors() ? kExitNumeric : kExitOk;
}

int run_dibl(const std::string& in, const std::string& meta_path, double vds_low,
             double vds_high, const std::string& out, const SmoothingFlags& sm) {
    SweepMetadata meta = load_metadata(meta_path);
    if (meta.kind != SweepKind::Transfer)
        throw ValidationError("InconsistentKind", "metadata kind is not 'transfer'");
    const SweepFamily family = ingest_sweep_file(in, meta);
    double lo = vds_low, hi = vds_high;
    if (lo == 0.0 && hi == 0.0) {
        lo = family.curves.front().fixed_bias;
        hi = family.curves.back().fixed_bias;
    }
    ExtractionReport report;
    report.device_id = meta.device_id;
    report_dibl(family, meta, lo, hi, sm.options(), report);
    write_report(report, out);
    return report.any_errors() ? kExitNumeric : kExitOk;
}

int run_bandsim(const std::string& stack_path, const std::string& out_csv,
                const std::string& summary_path, bool quantum,
                const std::string& materials_path, const std::string& sweep_axis,
                const std::vector<double>& sweep_values, int jobs,
                const std::string& sweep_out) {
    band::MaterialTable table = band::MaterialTable::defaults();
    std::string mat = materials_path;
    if (mat.empty())
        if (const char* env = std::getenv("HEMTKIT_MATERIALS")) mat = env;
    if (!mat.empty()) table = band::MaterialTable::load(mat);

    const band::StackProblem problem = band::load_stack(stack_path);

    if (!sweep_axis.empty()) {
        band::SweepAxis axis;
        if (sweep_axis == "thickness") axis = band::SweepAxis::BarrierThickness;
        else if (sweep_axis == "alfraction") axis = band::SweepAxis::AlFraction;
        else if (sweep_axis == "doping") axis = band::SweepAxis::Doping;
        else throw ValidationError("BadArgument",
                                   "sweep axis must be thickness|alfraction|doping");
        const auto points = band::sweep_design(problem, table, axis, sweep_values, jobs);
        std::ofstream out(sweep_out);
        if (!out)
            throw ValidationError("IOFailure", "cannot write " + sweep_out);
        out << "value,ns_cm2,ok\n";
        bool all_ok = true;
        for (const auto& p : points) {
            out << fmt17(p.value) << "," << fmt17(p.sheet_density_cm2) << ","
                << (p.ok ? 1 : 0) << "\n";
            all_ok = all_ok && p.ok;
        }
        return all_ok ? kExitOk : kExitNumeric;
    }

    const band::BandSolution solution =
        band::solve_self_consistent(problem, table, quantum);
    band::write_solution_csv(solution, out_csv);
    if (!summary_path.empty()) band::write_solution_summary(solution, summary_path);
    return solution.converged ? kExitOk : kExitNumeric;
}

int run_synth(const std::string& preset, const std::string& params_path,
              const std::string& outdir, double noise, unsigned long long seed) {
    if (preset == "paper") {
        synth::generate_paper_fixture(outdir, noise, seed);
        return kExitOk;
    }
    if (!preset.empty())
        throw ValidationError("BadArgument", "unknown preset '" + preset + "'");
    if (params_path.empty())
        throw ValidationError("BadArgument", "synth needs --preset or --params");
    synth::CompactModelParams p = synth::read_params(params_path);
    if (noise > 0.0) { p.noise_amplitude = noise; p.seed = seed; }

    // Default plan derived from the device's own threshold.
    synth::SweepPlan plan;
    plan.transfer_vgs = {p.vth - 0.45, p.vth + 2.0, 1226};
    plan.transfer_vds = {0.01, 0.05, 0.1};
    plan.output_vds = {0.0, 3.0, 151};
    plan.output_vgs = {p.vth + 0.5, p.vth + 1.0, p.vth + 1.5, p.vth + 2.0};
    plan.cv_vgs = {p.vth - 0.6, p.vth + 2.1, 541};
    synth::generate_fixture(p, plan, outdir);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FET sweep parameter extraction and 1D band simulation"};
    app.require_subcommand(1);

    // extract-transfer
    std::string et_in, et_meta, et_out, et_region = "linear", et_plots;
    SmoothingFlags et_sm;
    auto* et = app.add_subcommand("extract-transfer",
                                  "gm, SS, on/off currents, Vth from transfer sweeps");
    et->add_option("--in", et_in, "transfer CSV")->required();
    et->add_option("--meta", et_meta, "metadata JSON")->required();
    et->add_option("--out", et_out, "report JSON")->required();
    et->add_option("--region", et_region, "linear|saturation")
        ->check(CLI::IsMember({"linear", "saturation"}));
    et->add_option("--plots", et_plots, "directory for plot-data CSVs");
    et_sm.attach(et);

    // extract-output
    std::string eo_in, eo_meta, eo_out;
    SmoothingFlags eo_sm;
    auto* eo = app.add_subcommand("extract-output", "R_ON and knee voltage from output sweeps");
    eo->add_option("--in", eo_in, "output CSV")->required();
    eo->add_option("--meta", eo_meta, "metadata JSON")->required();
    eo->add_option("--out", eo_out, "report JSON")->required();
    eo_sm.attach(eo);

    // extract-cv
    std::string ec_in, ec_meta, ec_out, ec_plots;
    SmoothingFlags ec_sm;
    auto* ec = app.add_subcommand("extract-cv", "Vth and integrated charge from C-V sweeps");
    ec->add_option("--in", ec_in, "C-V CSV")->required();
    ec->add_option("--meta", ec_meta, "metadata JSON")->required();
    ec->add_option("--out", ec_out, "report JSON")->required();
    ec->add_option("--plots", ec_plots, "directory for plot-data CSVs");
    ec_sm.attach(ec);

    // mobility
    std::string mo_tr, mo_cv, mo_meta, mo_cv_meta, mo_out, mo_plots;
    SmoothingFlags mo_sm;
    auto* mo = app.add_subcommand("mobility",
                                  "field-effect mobility from transfer + C-V sweeps");
    mo->add_option("--transfer", mo_tr, "linear-region transfer CSV")->required();
    mo->add_option("--cv", mo_cv, "C-V CSV")->required();
    mo->add_option("--meta", mo_meta, "transfer metadata JSON")->required();
    mo->add_option("--cv-meta", mo_cv_meta, "C-V metadata JSON (defaults to --meta)");
    mo->add_option("--out", mo_out, "report JSON")->required();
    mo->add_option("--plots", mo_plots, "directory for plot-data CSVs");
    mo_sm.attach(mo);

    // dibl
    std::string di_in, di_meta, di_out;
    double di_low = 0.0, di_high = 0.0;
    SmoothingFlags di_sm;
    auto* di = app.add_subcommand("dibl", "DIBL from two transfer curves");
    di->add_option("--in", di_in, "transfer CSV holding both curves")->required();
    di->add_option("--meta", di_meta, "metadata JSON")->required();
    di->add_option("--out", di_out, "report JSON")->required();
    di->add_option("--low-vds", di_low, "low drain bias (default: family minimum)");
    di->add_option("--high-vds", di_high, "high drain bias (default: family maximum)");
    di_sm.attach(di);

    // bandsim
    std::string bs_stack, bs_out = "band.csv", bs_summary, bs_materials;
    std::string bs_axis, bs_sweep_out = "sweep.csv";
    std::vector<double> bs_values;
    bool bs_quantum = false;
    int bs_jobs = 1;
    auto* bs = app.add_subcommand("bandsim", "1D equilibrium band diagram of a layer stack");
    bs->add_option("--stack", bs_stack, "stack JSON")->required();
    bs->add_option("--out", bs_out, "band CSV (z_nm,ec_eV,n_cm3)");
    bs->add_option("--summary", bs_summary, "summary JSON");
    bs->add_option("--materials", bs_materials,
                   "material table JSON (or HEMTKIT_MATERIALS)");
    bs->add_flag("--quantum", bs_quantum, "couple the Schrodinger solver");
    bs->add_option("--sweep-axis", bs_axis, "thickness|alfraction|doping");
    bs->add_option("--sweep-values", bs_values, "values for the design sweep");
    bs->add_option("--sweep-out", bs_sweep_out, "sweep result CSV");
    bs->add_option("--jobs", bs_jobs, "parallel solves for sweeps");

    // synth
    std::string sy_preset, sy_params, sy_outdir;
    double sy_noise = 0.0;
    unsigned long long sy_seed = 0;
    auto* sy = app.add_subcommand("synth", "generate synthetic device fixtures");
    sy->add_option("--preset", sy_preset, "fixture preset (paper)");
    sy->add_option("--params", sy_params, "compact-model params JSON");
    sy->add_option("--outdir", sy_outdir, "output directory")->required();
    sy->add_option("--noise", sy_noise, "relative multiplicative noise amplitude");
    sy->add_option("--seed", sy_seed, "noise seed");

    // report merge
    std::vector<std::string> rp_in;
    std::string rp_out;
    auto* rp = app.add_subcommand("report", "merge extraction reports");
    rp->add_option("--in", rp_in, "input report JSONs")->required()->expected(-1);
    rp->add_option("--out", rp_out, "merged report JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (et->parsed())
            return run_extract_transfer(et_in, et_meta, et_region, et_out, et_sm, et_plots);
        if (eo->parsed())
            return run_extract_output(eo_in, eo_meta, eo_out, eo_sm);
        if (ec->parsed())
            return run_extract_cv(ec_in, ec_meta, ec_out, ec_sm, ec_plots);
        if (mo->parsed())
            return run_mobility(mo_tr, mo_cv, mo_meta, mo_cv_meta, mo_out, mo_sm, mo_plots);
        if (di->parsed())
            return run_dibl(di_in, di_meta, di_low, di_high, di_out, di_sm);
        if (bs->parsed())
            return run_bandsim(bs_stack, bs_out, bs_summary, bs_quantum, bs_materials,
                               bs_axis, bs_values, bs_jobs, bs_sweep_out);
        if (sy->parsed())
            return run_synth(sy_preset, sy_params, sy_outdir, sy_noise, sy_seed);
        if (rp->parsed()) {
            std::vector<ExtractionReport> parts;
            for (const auto& p : rp_in) parts.push_back(read_report(p));
            write_report(merge_reports(parts), rp_out);
            return kExitOk;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
