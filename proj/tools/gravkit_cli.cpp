// gravkit — command-line front end for the gravity-equation estimation
// toolkit.
//
// Subcommands:
//   fetch      download + extract the trade-flows archive
//   convert    Stata .dta -> CSV
//   fit        estimate one model, print its coefficient column
//   replicate  estimate all six models, print the coefficient table
//   verify     compare a produced table CSV against expected values
//
// Exit codes: 0 success; 1 usage; 2 data problem; 3 estimation problem;
// 4 verification mismatch.  Tables go to stdout, diagnostics to stderr.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gravkit/gravkit.hpp"

namespace {

constexpr const char* default_url = "https://personal.lse.ac.uk/tenreyro/regressors.zip";

gravkit::ColumnTable load_table(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".dta") return gravkit::read_dta(path);
    return gravkit::read_csv(path);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void print_model_diag(std::ostream& os, const gravkit::ReplicationDiagnostics::ModelDiag& d) {
    os << "  " << d.id << ": n=" << d.n_obs << " iterations=" << d.iterations
       << " dispersion=" << num(d.dispersion);
    if (d.loglik) os << " loglik=" << num(*d.loglik);
    os << '\n';
}

void print_search_diag(std::ostream& os, const gravkit::ShiftSearchState& s) {
    os << "  shift search: target=" << num(s.target) << " tol=" << num(s.tol) << " -> a="
       << num(s.a_final) << " after " << s.iterations << " fits\n";
    for (const auto& step : s.trace)
        os << "    a=" << num(step.a) << " estimate=" << num(step.estimate) << '\n';
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    if (!f) throw gravkit::IoError("cannot open '" + out_path + "' for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw gravkit::IoError("short write to '" + out_path + "'");
}

int run_fetch(const std::string& url, const std::string& dest) {
    const auto dta = gravkit::fetch_archive(url, dest);
    std::cerr << "fetched and extracted: " << dta.string() << '\n';
    std::cout << dta.string() << '\n';
    return 0;
}

int run_convert(const std::string& in, const std::string& out) {
    const gravkit::ColumnTable table = load_table(in);
    gravkit::write_csv(table, out);
    std::cerr << "wrote " << table.n_rows() << " rows x " << table.n_cols()
              << " numeric columns from " << table.source() << " to " << out << '\n';
    return 0;
}

int run_fit(const std::string& data, const std::string& model, std::size_t max_iter) {
    using namespace gravkit;
    const ColumnTable table = load_table(data);

    ModelSpec base;
    base.response = replication_response();
    base.regressors = replication_regressors();

    FitResult fit;
    TestKind kind = TestKind::student_t;
    std::string label;

    if (model == "ols1" || model == "ols2") {
        base.transform = model == "ols1" ? ResponseTransform::log() : ResponseTransform::log1p();
        base.row_filter = model == "ols1" ? RowFilter::positive_response : RowFilter::all;
        fit = fit_ols(build_design(table, base));
        label = model == "ols1" ? "OLS of ln(trade), positive flows"
                                : "OLS of ln(1+trade), all flows";
    } else if (model == "ppml1" || model == "ppml2") {
        base.row_filter = model == "ppml1" ? RowFilter::positive_response : RowFilter::all;
        fit = fit_glm_irls(build_design(table, base), Family::quasi_poisson(), nullptr,
                           GlmOptions{max_iter ? max_iter : 25, 1e-8});
        label = model == "ppml1" ? "quasi-Poisson, positive flows" : "quasi-Poisson, all flows";
    } else if (model == "nls") {
        const FitResult warm =
            fit_glm_irls(build_design(table, base), Family::quasi_poisson(), nullptr,
                         GlmOptions{max_iter ? max_iter : 25, 1e-8});
        fit = fit_glm_irls(build_design(table, base), Family::gaussian_log(), &warm,
                           GlmOptions{max_iter ? max_iter : 200, 1e-8});
        label = "Gaussian log-link NLS, all flows";
    } else if (model == "tobit") {
        const ShiftSearchResult search =
            search_censor_shift(table, base, 1.058, 0.001, 200.0,
                                TobitOptions{max_iter ? max_iter : 500, 1e-6, 1e-9});
        print_search_diag(std::cerr, search.state);
        fit = search.fit;
        kind = TestKind::normal;
        label = "censored (Tobit) model at the searched shift";
    } else {
        std::cerr << "error: unknown model '" << model
                  << "' (expected ols1, ols2, tobit, nls, ppml1, or ppml2)\n";
        return 1;
    }

    const ModelColumn col = column_from_fit(model, label, fit, kind);
    std::cerr << "  " << model << ": n=" << fit.n_obs << " iterations=" << fit.iterations
              << " dispersion=" << num(fit.dispersion);
    if (fit.loglik) std::cerr << " loglik=" << num(*fit.loglik);
    std::cerr << '\n';

    std::cout << model << " — " << label << '\n';
    for (const auto& term : fit.names) {
        char line[128];
        std::snprintf(line, sizeof line, "  %-12s %s\n", term.c_str(),
                      format_cell_text(col.cells.at(term)).c_str());
        std::cout << line;
    }
    std::cout << "  Observations " << fit.n_obs << '\n';
    return 0;
}

int run_replicate(const std::string& data, double a0, double target, double tol,
                  std::size_t max_iter, const std::string& format,
                  const std::string& out_path) {
    using namespace gravkit;
    const ColumnTable table = load_table(data);

    ReplicationOptions opts;
    opts.a0 = a0;
    opts.target = target;
    opts.tol = tol;
    if (max_iter) {
        opts.ppml_max_iter = max_iter;
        opts.nls_max_iter = max_iter;
        opts.tobit_max_iter = max_iter;
    }

    ReplicationDiagnostics diag;
    const ReplicationTable result = run_replication(table, opts, &diag);

    std::cerr << "diagnostics:\n  source: " << diag.source << '\n';
    for (const auto& d : diag.models) print_model_diag(std::cerr, d);
    print_search_diag(std::cerr, diag.search);

    const TableFormat f = format == "latex" ? TableFormat::latex
                          : format == "csv" ? TableFormat::csv
                                            : TableFormat::text;
    write_or_print(render(result, f), out_path);
    return 0;
}

int run_verify(const std::string& produced_path, const std::string& expected_path) {
    using namespace gravkit;
    const ReplicationTable produced = read_replication_csv(produced_path);
    const ReplicationTable expected = read_replication_csv(expected_path);
    const std::vector<std::string> mismatches = verify_tables(produced, expected);
    if (!mismatches.empty()) {
        for (const auto& m : mismatches) std::cerr << "mismatch: " << m << '\n';
        std::cerr << mismatches.size() << " mismatch(es)\n";
        return 4;
    }
    std::size_t cells = 0;
    for (const auto& m : expected.models) cells += m.cells.size();
    std::cout << "verified: " << expected.models.size() << " models, " << cells
              << " cells match the expected values\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gravity-equation estimation toolkit"};
    app.require_subcommand(1);

    auto* fetch = app.add_subcommand("fetch", "download and extract the trade-flows archive");
    std::string url = default_url, dest = ".";
    fetch->add_option("--url", url, "archive URL (http or https)");
    fetch->add_option("--dest", dest, "destination directory");

    auto* convert = app.add_subcommand("convert", "convert a Stata .dta file to CSV");
    std::string conv_in, conv_out;
    convert->add_option("--in", conv_in, "input file (.dta or .csv)")->required();
    convert->add_option("--out", conv_out, "output CSV path")->required();

    auto* fit = app.add_subcommand("fit", "estimate one model and print its column");
    std::string fit_data, fit_model;
    std::size_t fit_max_iter = 0;
    fit->add_option("--data", fit_data, "dataset (.dta or .csv)")->required();
    fit->add_option("--model", fit_model, "ols1, ols2, tobit, nls, ppml1, or ppml2")
        ->required();
    fit->add_option("--max-iter", fit_max_iter, "override the model's iteration cap");

    auto* replicate =
        app.add_subcommand("replicate", "estimate all six models and print the table");
    std::string rep_data, rep_format = "text", rep_out;
    double rep_a0 = 200.0, rep_target = 1.058, rep_tol = 0.001;
    std::size_t rep_max_iter = 0;
    replicate->add_option("--data", rep_data, "dataset (.dta or .csv)")->required();
    replicate->add_option("--a0", rep_a0, "starting censoring shift");
    replicate->add_option("--target", rep_target, "target slope for the shift search");
    replicate->add_option("--tol", rep_tol, "tolerance around the target");
    replicate->add_option("--max-iter", rep_max_iter, "override every iteration cap");
    replicate->add_option("--format", rep_format, "text, latex, or csv")
        ->check(CLI::IsMember({"text", "latex", "csv"}));
    replicate->add_option("--out", rep_out, "write the table here instead of stdout");

    auto* verify = app.add_subcommand("verify", "compare a produced table against expected");
    std::string ver_produced, ver_expected;
    verify->add_option("--produced", ver_produced, "table CSV produced by replicate")
        ->required();
    verify->add_option("--expected", ver_expected, "expected-values CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*fetch) return run_fetch(url, dest);
        if (*convert) return run_convert(conv_in, conv_out);
        if (*fit) return run_fit(fit_data, fit_model, fit_max_iter);
        if (*replicate)
            return run_replicate(rep_data, rep_a0, rep_target, rep_tol, rep_max_iter,
                                 rep_format, rep_out);
        if (*verify) return run_verify(ver_produced, ver_expected);
    } catch (const gravkit::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const gravkit::FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
