#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gravkit/csv.hpp"
#include "gravkit/dist.hpp"
#include "gravkit/error.hpp"
#include "gravkit/fit.hpp"
#include "gravkit/fsio.hpp"
#include "gravkit/glm.hpp"
#include "gravkit/model.hpp"
#include "gravkit/ols.hpp"
#include "gravkit/table.hpp"
#include "gravkit/tobit.hpp"

namespace gravkit {

/// Significance stars from a two-sided p-value.
inline int star_level(double p) {
    return p < 0.01 ? 3 : (p < 0.05 ? 2 : (p < 0.1 ? 1 : 0));
}

inline const char* star_text(int level) {
    static const char* marks[] = {"", "*", "**", "***"};
    return (level >= 0 && level <= 3) ? marks[level] : "";
}

struct TableCell {
    double estimate = 0.0;
    double se = 0.0;
    int stars = 0;
};

struct ModelColumn {
    std::string id;    ///< machine name: ols1, ols2, tobit, nls, ppml1, ppml2
    std::string label; ///< display name: OLS, Tobit, NLS, PPML
    std::size_t n_obs = 0;
    std::map<std::string, TableCell> cells; ///< by term
};

/// A rendered-comparison-ready coefficient table: ordered terms (rows)
/// by ordered model columns, with per-cell estimates, standard errors,
/// and significance stars.
struct ReplicationTable {
    std::vector<std::string> terms;
    std::vector<ModelColumn> models;

    const ModelColumn* find_model(std::string_view id) const {
        for (const auto& m : models)
            if (m.id == id) return &m;
        return nullptr;
    }

    const TableCell* find_cell(std::string_view model_id, const std::string& term) const {
        const ModelColumn* m = find_model(model_id);
        if (!m) return nullptr;
        auto it = m->cells.find(term);
        return it == m->cells.end() ? nullptr : &it->second;
    }

    /// Structural invariants: at least one model, no empty model column,
    /// every cell finite with a positive standard error, every cell's
    /// term listed in `terms`.
    void validate() const {
        if (models.empty())
            throw Error("replication table has no model columns");
        for (const auto& m : models) {
            if (m.cells.empty())
                throw Error("model column '" + m.id + "' has no cells");
            for (const auto& [term, cell] : m.cells) {
                if (!std::isfinite(cell.estimate) || !std::isfinite(cell.se) || cell.se <= 0.0)
                    throw Error("model '" + m.id + "', term '" + term +
                                "' has a non-finite estimate or non-positive SE");
                bool known = false;
                for (const auto& t : terms)
                    if (t == term) { known = true; break; }
                if (!known)
                    throw Error("model '" + m.id + "' has a cell for unlisted term '" + term +
                                "'");
            }
        }
    }
};

enum class TestKind { student_t, normal };

/// Column from a fit: stars use two-sided t tests on n−p degrees of
/// freedom for least-squares and quasi-likelihood fits, and normal z
/// tests for maximum-likelihood fits.
inline ModelColumn column_from_fit(std::string id, std::string label, const FitResult& fit,
                                   TestKind kind) {
    ModelColumn col;
    col.id = std::move(id);
    col.label = std::move(label);
    col.n_obs = fit.n_obs;
    const double df =
        static_cast<double>(fit.n_obs) - static_cast<double>(fit.beta.size());
    for (std::size_t j = 0; j < fit.beta.size(); ++j) {
        const double t = fit.beta[j] / fit.se[j];
        const double p = kind == TestKind::student_t ? student_t_two_sided_p(t, df)
                                                     : normal_two_sided_p(t);
        col.cells[fit.names[j]] = TableCell{fit.beta[j], fit.se[j], star_level(p)};
    }
    return col;
}

// ---------------------------------------------------------------------------
// The trade-flows replication itself.

/// The fourteen gravity regressors, in model order.
inline const std::vector<std::string>& replication_regressors() {
    static const std::vector<std::string> regs = {
        "lypex",  "lypim",    "lyex",      "lyim",       "ldist",
        "border", "comlang",  "colony",    "landl_ex",   "landl_im",
        "lremot_ex", "lremot_im", "comfrt_wto", "open_wto"};
    return regs;
}

inline const std::string& replication_response() {
    static const std::string r = "trade";
    return r;
}

struct ReplicationOptions {
    double a0 = 200.0;     ///< starting censoring shift
    double target = 1.058; ///< slope the shift search matches
    double tol = 0.001;    ///< acceptance band around the target
    std::size_t ppml_max_iter = 25;
    std::size_t nls_max_iter = 200;
    std::size_t tobit_max_iter = 500;
};

/// Per-model convergence facts, for the diagnostics stream.
struct ReplicationDiagnostics {
    struct ModelDiag {
        std::string id;
        std::size_t n_obs = 0;
        std::size_t iterations = 0;
        double dispersion = 1.0;
        std::optional<double> loglik;
    };
    std::vector<ModelDiag> models;
    ShiftSearchState search;
    std::string source;
};

/// Fit all six models and assemble the coefficient table:
///   (1) OLS of ln(trade) on the regressors, positive flows only;
///   (2) OLS of ln(1+trade), all flows;
///   (3) the censored (Tobit) model at the searched shift — the final
///       fit made by the shift search;
///   (4) Gaussian log-link NLS, warm-started from (6);
///   (5) quasi-Poisson on positive flows;
///   (6) quasi-Poisson on all flows.
/// Deterministic: same table and options, same result.
inline ReplicationTable run_replication(const ColumnTable& table,
                                        const ReplicationOptions& opts = {},
                                        ReplicationDiagnostics* diag = nullptr) {
    std::string missing;
    for (const auto& c : replication_regressors())
        if (!table.has(c)) missing += (missing.empty() ? "" : ", ") + c;
    if (!table.has(replication_response()))
        missing += (missing.empty() ? "" : ", ") + replication_response();
    if (!missing.empty())
        throw NameError("input table is missing required columns: " + missing);

    ModelSpec base;
    base.response = replication_response();
    base.regressors = replication_regressors();

    auto spec_with = [&](ResponseTransform t, RowFilter f) {
        ModelSpec s = base;
        s.transform = t;
        s.row_filter = f;
        return s;
    };

    const FitResult ols1 = fit_ols(
        build_design(table, spec_with(ResponseTransform::log(), RowFilter::positive_response)));
    const FitResult ols2 =
        fit_ols(build_design(table, spec_with(ResponseTransform::log1p(), RowFilter::all)));
    const FitResult ppml1 = fit_glm_irls(
        build_design(table, spec_with(ResponseTransform::identity(), RowFilter::positive_response)),
        Family::quasi_poisson(), nullptr, GlmOptions{opts.ppml_max_iter, 1e-8});
    const FitResult ppml2 = fit_glm_irls(
        build_design(table, spec_with(ResponseTransform::identity(), RowFilter::all)),
        Family::quasi_poisson(), nullptr, GlmOptions{opts.ppml_max_iter, 1e-8});
    const FitResult nls = fit_glm_irls(
        build_design(table, spec_with(ResponseTransform::identity(), RowFilter::all)),
        Family::gaussian_log(), &ppml2, GlmOptions{opts.nls_max_iter, 1e-8});
    const ShiftSearchResult search =
        search_censor_shift(table, base, opts.target, opts.tol, opts.a0,
                            TobitOptions{opts.tobit_max_iter, 1e-6, 1e-9});

    ReplicationTable out;
    out.terms = replication_regressors();
    out.terms.push_back("logSigma");
    out.terms.push_back("(Intercept)");
    out.models.push_back(column_from_fit("ols1", "OLS", ols1, TestKind::student_t));
    out.models.push_back(column_from_fit("ols2", "OLS", ols2, TestKind::student_t));
    out.models.push_back(column_from_fit("tobit", "Tobit", search.fit, TestKind::normal));
    out.models.push_back(column_from_fit("nls", "NLS", nls, TestKind::student_t));
    out.models.push_back(column_from_fit("ppml1", "PPML", ppml1, TestKind::student_t));
    out.models.push_back(column_from_fit("ppml2", "PPML", ppml2, TestKind::student_t));

    if (diag) {
        diag->source = table.source();
        diag->search = search.state;
        auto add = [&](const char* id, const FitResult& f) {
            diag->models.push_back({id, f.n_obs, f.iterations, f.dispersion, f.loglik});
        };
        add("ols1", ols1);
        add("ols2", ols2);
        add("tobit", search.fit);
        add("nls", nls);
        add("ppml1", ppml1);
        add("ppml2", ppml2);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rendering.

enum class TableFormat { text, latex, csv };

namespace detail {

inline std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string with_thousands(std::size_t n) {
    const std::string raw = std::to_string(n);
    std::string out;
    const std::size_t lead = raw.size() % 3 == 0 ? 3 : raw.size() % 3;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (i != 0 && (i - lead) % 3 == 0 && i >= lead) out.push_back(',');
        out.push_back(raw[i]);
    }
    return out;
}

inline std::string latex_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '_' || c == '&' || c == '%' || c == '#') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

inline std::string display_term(const std::string& term) {
    return term == "(Intercept)" ? "Constant" : term;
}

} // namespace detail

/// One-line cell form used by single-model summaries: "0.677*** (0.007)".
inline std::string format_cell_text(const TableCell& cell) {
    return detail::fixed3(cell.estimate) + star_text(cell.stars) + " (" +
           detail::fixed3(cell.se) + ")";
}

namespace detail {

inline std::string render_text(const ReplicationTable& t) {
    const std::size_t k = t.models.size();
    // Assemble cell strings first, then size the columns.
    std::vector<std::string> headers(k);
    for (std::size_t m = 0; m < k; ++m)
        headers[m] = "(" + std::to_string(m + 1) + ") " + t.models[m].label;

    std::vector<std::size_t> width(k);
    auto est_text = [](const TableCell& c) { return fixed3(c.estimate) + star_text(c.stars); };
    auto se_text = [](const TableCell& c) { return "(" + fixed3(c.se) + ")"; };
    for (std::size_t m = 0; m < k; ++m) {
        width[m] = headers[m].size();
        for (const auto& term : t.terms)
            if (const TableCell* c = t.find_cell(t.models[m].id, term)) {
                width[m] = std::max(width[m], est_text(*c).size());
                width[m] = std::max(width[m], se_text(*c).size());
            }
        width[m] = std::max(width[m], with_thousands(t.models[m].n_obs).size());
    }
    std::size_t term_w = std::string("Observations").size();
    for (const auto& term : t.terms) term_w = std::max(term_w, display_term(term).size());

    std::string out;
    auto pad_right = [&](const std::string& s, std::size_t w) {
        out += s;
        out.append(w > s.size() ? w - s.size() : 0, ' ');
    };
    auto pad_left = [&](const std::string& s, std::size_t w) {
        out.append(w > s.size() ? w - s.size() : 0, ' ');
        out += s;
    };
    auto rule = [&]() {
        std::size_t total = term_w;
        for (std::size_t m = 0; m < k; ++m) total += 2 + width[m];
        out.append(total, '-');
        out.push_back('\n');
    };

    rule();
    pad_right("", term_w);
    for (std::size_t m = 0; m < k; ++m) {
        out += "  ";
        pad_left(headers[m], width[m]);
    }
    out.push_back('\n');
    rule();
    for (const auto& term : t.terms) {
        pad_right(display_term(term), term_w);
        for (std::size_t m = 0; m < k; ++m) {
            out += "  ";
            const TableCell* c = t.find_cell(t.models[m].id, term);
            pad_left(c ? est_text(*c) : "", width[m]);
        }
        out.push_back('\n');
        pad_right("", term_w);
        for (std::size_t m = 0; m < k; ++m) {
            out += "  ";
            const TableCell* c = t.find_cell(t.models[m].id, term);
            pad_left(c ? se_text(*c) : "", width[m]);
        }
        out.push_back('\n');
    }
    rule();
    pad_right("Observations", term_w);
    for (std::size_t m = 0; m < k; ++m) {
        out += "  ";
        pad_left(with_thousands(t.models[m].n_obs), width[m]);
    }
    out.push_back('\n');
    rule();
    out += "Note: *** p<0.01, ** p<0.05, * p<0.1; standard errors in parentheses.\n";
    return out;
}

inline std::string render_latex(const ReplicationTable& t) {
    const std::size_t k = t.models.size();
    std::string out;
    out += "\\begin{tabular}{l";
    out.append(k, 'c');
    out += "}\n\\hline\\hline\n";
    for (std::size_t m = 0; m < k; ++m)
        out += " & (" + std::to_string(m + 1) + ")";
    out += " \\\\\n";
    for (std::size_t m = 0; m < k; ++m) out += " & " + latex_escape(t.models[m].label);
    out += " \\\\\n\\hline\n";
    for (const auto& term : t.terms) {
        out += latex_escape(display_term(term));
        for (std::size_t m = 0; m < k; ++m) {
            const TableCell* c = t.find_cell(t.models[m].id, term);
            out += " & ";
            if (c) {
                out += fixed3(c->estimate);
                if (c->stars > 0)
                    out += "$^{" + std::string(star_text(c->stars)) + "}$";
            }
        }
        out += " \\\\\n";
        for (std::size_t m = 0; m < k; ++m) {
            const TableCell* c = t.find_cell(t.models[m].id, term);
            out += " & ";
            if (c) out += "(" + fixed3(c->se) + ")";
        }
        out += " \\\\\n";
    }
    out += "\\hline\nObservations";
    for (std::size_t m = 0; m < k; ++m) out += " & " + with_thousands(t.models[m].n_obs);
    out += " \\\\\n\\hline\\hline\n";
    out += "\\multicolumn{" + std::to_string(k + 1) +
           "}{r}{$^{***}$p$<$0.01; $^{**}$p$<$0.05; $^{*}$p$<$0.1} \\\\\n";
    out += "\\end{tabular}\n";
    return out;
}

inline std::string render_csv(const ReplicationTable& t) {
    std::string out = "model,term,estimate,se,stars\n";
    for (const auto& m : t.models) {
        for (const auto& term : t.terms) {
            auto it = m.cells.find(term);
            if (it == m.cells.end()) continue;
            out += m.id;
            out.push_back(',');
            out += term;
            out.push_back(',');
            append_double(out, it->second.estimate);
            out.push_back(',');
            append_double(out, it->second.se);
            out.push_back(',');
            out += star_text(it->second.stars);
            out.push_back('\n');
        }
        out += m.id;
        out += ",_n_obs,";
        append_double(out, static_cast<double>(m.n_obs));
        out += ",,\n";
    }
    return out;
}

inline std::string label_for_model_id(const std::string& id) {
    if (id.rfind("ols", 0) == 0) return "OLS";
    if (id == "tobit") return "Tobit";
    if (id == "nls") return "NLS";
    if (id.rfind("ppml", 0) == 0) return "PPML";
    return id;
}

} // namespace detail

/// Render the table.  text and latex mirror the printed layout (3-decimal
/// estimates, stars, SEs parenthesized beneath, observation counts);
/// csv is the full-precision long form `model,term,estimate,se,stars`
/// with one `_n_obs` pseudo-term per model, and parses back losslessly.
inline std::string render(const ReplicationTable& t, TableFormat format) {
    t.validate();
    switch (format) {
        case TableFormat::text: return detail::render_text(t);
        case TableFormat::latex: return detail::render_latex(t);
        case TableFormat::csv: return detail::render_csv(t);
    }
    throw Error("unknown table format");
}

/// Inverse of render(..., csv): rebuilds terms, model order, cells, and
/// observation counts (estimates and SEs bit-exact).
inline ReplicationTable parse_replication_csv(const std::string& text) {
    ReplicationTable t;
    std::size_t line_no = 0;
    std::string_view rest = text;
    auto next_line = [&]() -> std::optional<std::string_view> {
        if (rest.empty()) return std::nullopt;
        const std::size_t nl = rest.find('\n');
        std::string_view line = nl == std::string_view::npos ? rest : rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        return line;
    };

    auto header = next_line();
    if (!header || *header != "model,term,estimate,se,stars")
        throw FormatError("replication CSV must start with 'model,term,estimate,se,stars'");

    std::vector<std::string_view> fields;
    while (auto line = next_line()) {
        if (line->empty()) continue;
        detail::split_fields(*line, fields);
        if (fields.size() != 5)
            throw FormatError("replication CSV line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, expected 5");
        const std::string model_id(fields[0]);
        const std::string term(fields[1]);
        ModelColumn* model = nullptr;
        for (auto& m : t.models)
            if (m.id == model_id) model = &m;
        if (!model) {
            t.models.push_back(
                ModelColumn{model_id, detail::label_for_model_id(model_id), 0, {}});
            model = &t.models.back();
        }
        double estimate;
        if (!detail::parse_double(fields[2], estimate))
            throw ParseError("cannot parse estimate '" + std::string(fields[2]) + "' at line " +
                                 std::to_string(line_no),
                             line_no, "estimate");
        if (term == "_n_obs") {
            model->n_obs = static_cast<std::size_t>(estimate);
            continue;
        }
        double se;
        if (!detail::parse_double(fields[3], se))
            throw ParseError("cannot parse se '" + std::string(fields[3]) + "' at line " +
                                 std::to_string(line_no),
                             line_no, "se");
        int stars = 0;
        for (char c : fields[4]) {
            if (c != '*')
                throw FormatError("bad stars field at line " + std::to_string(line_no));
            ++stars;
        }
        if (stars > 3)
            throw FormatError("bad stars field at line " + std::to_string(line_no));
        bool seen = false;
        for (const auto& existing : t.terms)
            if (existing == term) { seen = true; break; }
        if (!seen) t.terms.push_back(term);
        model->cells[term] = TableCell{estimate, se, stars};
    }
    return t;
}

inline ReplicationTable read_replication_csv(const std::filesystem::path& path) {
    const auto bytes = detail::load_file(path);
    return parse_replication_csv(std::string(bytes.begin(), bytes.end()));
}

// ---------------------------------------------------------------------------
// Verification against expected values.

struct VerifyOptions {
    double ols_abs_band = 5e-4;   ///< extra unrounded band for the OLS columns
    double tobit_abs_band = 2e-3; ///< absolute band for the censored model
};

namespace detail {

inline double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

} // namespace detail

/// Compare a produced table against expected values (typically parsed
/// from the checked-in expected CSV, which holds the printed, 3-decimal
/// numbers).  Rules by model id:
///   - ols*: 3-decimal rounding equality AND unrounded within 5e-4;
///   - tobit: absolute difference within 2e-3;
///   - everything else (nls, ppml*): 3-decimal rounding equality.
/// Stars and observation counts must match exactly; so must the sets of
/// models and of cells.  Returns one line per mismatch; empty means pass.
inline std::vector<std::string> verify_tables(const ReplicationTable& produced,
                                              const ReplicationTable& expected,
                                              VerifyOptions opts = {}) {
    std::vector<std::string> mismatches;
    auto complain = [&](const std::string& line) { mismatches.push_back(line); };

    for (const auto& em : expected.models) {
        const ModelColumn* pm = produced.find_model(em.id);
        if (!pm) {
            complain("model '" + em.id + "' missing from produced table");
            continue;
        }
        if (pm->n_obs != em.n_obs)
            complain("model '" + em.id + "': observations " + std::to_string(pm->n_obs) +
                     " != expected " + std::to_string(em.n_obs));

        const bool is_ols = em.id.rfind("ols", 0) == 0;
        const bool is_tobit = em.id == "tobit";
        auto check_value = [&](const std::string& term, const char* what, double got,
                               double want) {
            if (is_tobit) {
                if (std::fabs(got - want) > opts.tobit_abs_band)
                    complain("model '" + em.id + "', " + what + " '" + term + "': |" +
                             std::to_string(got) + " - " + std::to_string(want) +
                             "| exceeds " + std::to_string(opts.tobit_abs_band));
                return;
            }
            if (std::fabs(detail::round3(got) - want) > 1e-9)
                complain("model '" + em.id + "', " + what + " '" + term + "': " +
                         std::to_string(got) + " does not round to " + std::to_string(want));
            if (is_ols && std::fabs(got - want) > opts.ols_abs_band)
                complain("model '" + em.id + "', " + what + " '" + term + "': |" +
                         std::to_string(got) + " - " + std::to_string(want) + "| exceeds " +
                         std::to_string(opts.ols_abs_band));
        };

        for (const auto& [term, want] : em.cells) {
            auto it = pm->cells.find(term);
            if (it == pm->cells.end()) {
                complain("model '" + em.id + "': cell '" + term + "' missing");
                continue;
            }
            check_value(term, "estimate", it->second.estimate, want.estimate);
            check_value(term, "se", it->second.se, want.se);
            if (it->second.stars != want.stars)
                complain("model '" + em.id + "', term '" + term + "': stars '" +
                         star_text(it->second.stars) + "' != expected '" +
                         star_text(want.stars) + "'");
        }
        for (const auto& [term, cell] : pm->cells)
            if (em.cells.find(term) == em.cells.end())
                complain("model '" + em.id + "': unexpected extra cell '" + term + "'");
    }
    for (const auto& pm : produced.models)
        if (!expected.find_model(pm.id))
            complain("unexpected extra model '" + pm.id + "' in produced table");
    return mismatches;
}

} // namespace gravkit
