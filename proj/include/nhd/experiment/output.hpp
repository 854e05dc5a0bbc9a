#pragma once

/**
 * @file
 * Writers for the run report: figure2 / figure3 CSVs (12 significant
 * digits, '.' decimal), a JSON report and optional SVG sketches.
 * Nothing time- or host-dependent is written, so repeated runs are
 * byte-identical.
 */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nhd/experiment/pipeline.hpp"

namespace nhd::experiment {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
}

// ---------------------------------------------------------------------------
// figure 2
// ---------------------------------------------------------------------------

inline std::string figure2_csv(const RunReport &rep) {
    std::ostringstream os;
    os << "r,t,state_tag,sx,sy,sz,sx_err,sy_err,sz_err,p_branch,n_eff,seed\n";
    for (const PointResult &p : rep.points) {
        for (const Row &row : p.rows) {
            os << fmt(row.r) << ',' << fmt(row.t) << ',' << row.tag << ',' << fmt(row.estimate.x) << ','
               << fmt(row.estimate.y) << ',' << fmt(row.estimate.z) << ',' << fmt(row.std_error.x) << ','
               << fmt(row.std_error.y) << ',' << fmt(row.std_error.z) << ',' << fmt(row.p_branch) << ','
               << fmt(row.n_eff) << ',' << row.seed << '\n';
        }
    }
    return os.str();
}

/// Closed-form curves on a grid ten times denser than the sampled one.
inline std::string figure2_exact_csv(const ExperimentConfig &cfg) {
    std::ostringstream os;
    os << "r,t,state_tag,sx,sy,sz\n";
    const std::vector<double> dense = linspace(cfg.t0, cfg.t1, (cfg.steps - 1) * 10 + 1);
    for (double r : cfg.r_values) {
        const Hamiltonian h = Hamiltonian::two_level(r);
        for (double t : dense) {
            const auto tri = three_state_expectations(psi_triple(h, t, cfg.psi0, cfg.t0));
            for (const char *tag : kStateTags) {
                const BlochVector &b = tri.at(tag);
                os << fmt(r) << ',' << fmt(t) << ',' << tag << ',' << fmt(b.x) << ',' << fmt(b.y) << ','
                   << fmt(b.z) << '\n';
            }
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// figure 3
// ---------------------------------------------------------------------------

inline void put_rho(std::ostringstream &os, const std::optional<Matrix> &m) {
    if (!m) {
        os << ",nan,nan,nan,nan";
        return;
    }
    os << ',' << fmt((*m)(0, 0).real()) << ',' << fmt((*m)(1, 1).real()) << ',' << fmt((*m)(0, 1).real())
       << ',' << fmt((*m)(0, 1).imag());
}

/// The rho_psi Bloch trajectory and rho / tr rho for one r, first seed only.
inline std::string figure3_csv(const RunReport &rep, std::size_t ri) {
    std::ostringstream os;
    os << "t,sx,sy,sz,sx_est,sy_est,sz_est,sx_err,sy_err,sz_err";
    for (const char *src : {"exact", "pipeline", "shots"}) {
        os << ",rho00_" << src << ",rho11_" << src << ",rho01_re_" << src << ",rho01_im_" << src;
    }
    os << '\n';
    const std::uint64_t seed = rep.config.seed_list().front();
    for (std::size_t ti = 0; ti < rep.grid.size(); ++ti) {
        const PointResult &p = rep.at(ri, ti);
        const BlochVector &e = p.exact.at("rho_psi");
        os << fmt(p.t) << ',' << fmt(e.x) << ',' << fmt(e.y) << ',' << fmt(e.z);
        const Row *row = nullptr;
        for (const Row &rw : p.rows) {
            if (rw.tag == "rho_psi" && rw.seed == seed) {
                row = &rw;
                break;
            }
        }
        if (row) {
            os << ',' << fmt(row->estimate.x) << ',' << fmt(row->estimate.y) << ',' << fmt(row->estimate.z)
               << ',' << fmt(row->std_error.x) << ',' << fmt(row->std_error.y) << ','
               << fmt(row->std_error.z);
        } else {
            os << ",nan,nan,nan,nan,nan,nan";
        }
        put_rho(os, p.rho_normalized);
        put_rho(os, p.rho_pipeline);
        put_rho(os, p.rho_shots);
        os << '\n';
    }
    return os.str();
}

inline std::string r_label(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", r);
    return buf;
}

/// rho / tr rho rescaled back to det 1 (the metric's own normalization).
inline Matrix unit_det(const Matrix &m) {
    const double det = m.determinant().real();
    if (!(det > 0.0)) {
        throw Error(ErrorCode::Singular, "matrix has non-positive determinant", det);
    }
    return m / std::sqrt(det);
}

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double> &x, const std::vector<double> &y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Trapezoidal average of piecewise-linear samples over [a, b]; b may fall between grid points.
inline Matrix average_partial(const std::vector<Matrix> &vals, const std::vector<double> &grid, double a,
                              double b) {
    Matrix acc = Matrix::Zero(vals[0].rows(), vals[0].cols());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double lo = std::max(a, grid[k]);
        const double hi = std::min(b, grid[k + 1]);
        if (hi <= lo) {
            continue;
        }
        const double w = grid[k + 1] - grid[k];
        auto at = [&](double t) { return vals[k] + (t - grid[k]) / w * (vals[k + 1] - vals[k]); };
        acc += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    return acc / (b - a);
}

inline nlohmann::ordered_json matrix_json(const Matrix &m) {
    nlohmann::ordered_json re = nlohmann::ordered_json::array();
    nlohmann::ordered_json im = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::ordered_json rr = nlohmann::ordered_json::array();
        nlohmann::ordered_json ri = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ri.push_back(m(i, j).imag());
        }
        re.push_back(rr);
        im.push_back(ri);
    }
    return {{"re", re}, {"im", im}};
}

struct Figure3Summary {
    double r = 0.0;
    std::optional<double> slope_expected;     // 2 sqrt(r^2 - 1), broken phase only
    double slope_exact = 0.0;                 // ln lambda_max over the second half of the window
    std::optional<double> slope_reconstructed;
    std::optional<double> period;
    std::optional<Matrix> average_exact;         // det-1 period average, dense closed form
    std::optional<Matrix> average_reconstructed; // shot reconstruction, det-1, output grid
    std::optional<Matrix> stationary;            // e^{beta sigma_y}
};

/// A shot estimate can be singular once the psi-branch weight is clipped to zero.
inline bool usable(const std::optional<Matrix> &m) {
    return m && m->determinant().real() > 1e-14;
}

inline Figure3Summary figure3_summary(const RunReport &rep, std::size_t ri) {
    const ExperimentConfig &cfg = rep.config;
    Figure3Summary s;
    s.r = cfg.r_values[ri];
    const Hamiltonian h = Hamiltonian::two_level(s.r);
    if (std::abs(s.r) > 1.0) {
        s.slope_expected = 2.0 * std::sqrt(s.r * s.r - 1.0);
    }
    const double mid = 0.5 * (cfg.t0 + cfg.t1);
    std::vector<double> ts, ye, yr;
    bool have_rec = true;
    for (std::size_t ti = 0; ti < rep.grid.size(); ++ti) {
        const PointResult &p = rep.at(ri, ti);
        if (p.t < mid - 1e-12) {
            continue;
        }
        ts.push_back(p.t);
        ye.push_back(std::log(eigh(metric_closed_form(h, p.t, cfg.t0)).eigenvalues.maxCoeff()));
        if (usable(p.rho_shots)) {
            yr.push_back(std::log(eigh(unit_det(*p.rho_shots)).eigenvalues.maxCoeff()));
        } else {
            have_rec = false;
        }
    }
    s.slope_exact = ls_slope(ts, ye);
    if (have_rec && yr.size() == ts.size() && ts.size() >= 2) {
        s.slope_reconstructed = ls_slope(ts, yr);
    }

    s.period = metric_period(h);
    if (s.period) {
        const double a = cfg.t0;
        const double b = cfg.t0 + *s.period;
        const std::vector<double> dense = linspace(a, b, 4001);
        std::vector<Matrix> rho;
        for (double t : dense) {
            rho.push_back(metric_closed_form(h, t, cfg.t0));
        }
        s.average_exact = time_averaged_metric(rho, dense, a, b, AverageNormalization::UnitDeterminant);
        if (b <= cfg.t1 + 1e-12) {
            std::vector<Matrix> rec;
            for (std::size_t ti = 0; ti < rep.grid.size() && have_rec; ++ti) {
                const PointResult &p = rep.at(ri, ti);
                if (!usable(p.rho_shots)) {
                    have_rec = false;
                    break;
                }
                rec.push_back(unit_det(*p.rho_shots));
            }
            if (have_rec) {
                s.average_reconstructed = unit_det(average_partial(rec, rep.grid, a, b));
            }
        }
        if (std::abs(s.r) < 1.0) {
            s.stationary = stationary_metric_analytic(s.r);
        }
    }
    return s;
}

inline nlohmann::ordered_json summary_json(const Figure3Summary &s) {
    nlohmann::ordered_json j;
    j["r"] = s.r;
    j["lambda_max_slope_expected"] = s.slope_expected ? nlohmann::ordered_json(*s.slope_expected) : nullptr;
    j["lambda_max_slope_exact"] = s.slope_exact;
    j["lambda_max_slope_reconstructed"] =
        s.slope_reconstructed ? nlohmann::ordered_json(*s.slope_reconstructed) : nullptr;
    j["period"] = s.period ? nlohmann::ordered_json(*s.period) : nullptr;
    auto put = [&](const char *key, const std::optional<Matrix> &m) {
        j[key] = m ? matrix_json(*m) : nlohmann::ordered_json(nullptr);
        const std::string tn = std::string(key) + "_trace_normalized";
        j[tn] = m ? matrix_json(*m / m->trace().real()) : nlohmann::ordered_json(nullptr);
    };
    put("period_average_exact", s.average_exact);
    put("period_average_reconstructed", s.average_reconstructed);
    put("stationary_metric", s.stationary);
    return j;
}

// ---------------------------------------------------------------------------
// JSON report
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json config_json(const ExperimentConfig &c) {
    nlohmann::ordered_json j;
    j["r_values"] = c.r_values;
    j["t0"] = c.t0;
    j["t1"] = c.t1;
    j["steps"] = c.steps;
    j["scheme"] = std::string(to_string(c.scheme));
    j["shots"] = c.shots;
    j["seeds"] = c.seed_list();
    j["psi0"] = {c.psi0(0).real(), c.psi0(0).imag(), c.psi0(1).real(), c.psi0(1).imag()};
    j["out_dir"] = c.out_dir;
    j["emit_plots"] = c.emit_plots;
    j["ode_step"] = c.ode_step;
    j["tomography_shots"] = c.tomography_shots;
    return j;
}

inline nlohmann::ordered_json bloch_json(const BlochVector &b) { return {b.x, b.y, b.z}; }

inline nlohmann::ordered_json report_json(const RunReport &rep) {
    nlohmann::ordered_json j;
    j["config"] = config_json(rep.config);
    nlohmann::ordered_json per_r = nlohmann::ordered_json::array();
    for (const RSummary &s : rep.per_r) {
        nlohmann::ordered_json e;
        e["r"] = s.r;
        e["period"] = s.period ? nlohmann::ordered_json(*s.period) : nullptr;
        e["naimark_prefactor"] = s.naimark_prefactor;
        e["naimark_onset"] = s.naimark_onset ? nlohmann::ordered_json(*s.naimark_onset) : nullptr;
        e["naimark_onset_with_prefactor"] =
            s.naimark_onset_k ? nlohmann::ordered_json(*s.naimark_onset_k) : nullptr;
        e["rk4_residual"] = s.rk4_residual;
        e["rk4_metric_norm_defect"] = s.ode_norm_defect;
        e["max_h_hermiticity_defect"] = s.max_h_hermiticity;
        e["max_u_h_unitarity_defect"] = s.max_u_h_unitarity;
        per_r.push_back(e);
    }
    j["per_r"] = per_r;

    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    std::size_t flagged = 0;
    for (const PointResult &p : rep.points) {
        nlohmann::ordered_json e;
        e["r"] = p.r;
        e["t"] = p.t;
        nlohmann::ordered_json ex;
        for (const auto &[tag, b] : p.exact) {
            ex[tag] = bloch_json(b);
        }
        e["exact"] = ex;
        e["unitarity_defect"] = p.unitarity;
        e["gbond_literal_defect"] = p.gbond_literal_defect;
        e["naimark_valid"] = p.naimark_valid;
        e["naimark_margin"] = p.naimark_margin;
        e["h_hermiticity_defect"] = p.h_hermiticity;
        e["det_defect"] = p.det_defect;
        e["metric_norm_defect"] = p.metric_norm_defect;
        e["branch_mismatch"] = p.branch_mismatch;
        e["rho_normalized_exact"] = matrix_json(p.rho_normalized);
        e["rho_normalized_pipeline"] = p.rho_pipeline ? matrix_json(*p.rho_pipeline) : nlohmann::ordered_json(nullptr);
        e["rho_normalized_shots"] = p.rho_shots ? matrix_json(*p.rho_shots) : nlohmann::ordered_json(nullptr);
        e["residual_pipeline"] = p.residual_pipeline;
        e["residual_shots"] = p.residual_shots;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const Row &row : p.rows) {
            flagged += row.flagged ? 1 : 0;
            rows.push_back({{"tag", row.tag},
                            {"seed", row.seed},
                            {"exact", bloch_json(row.exact)},
                            {"estimate", bloch_json(row.estimate)},
                            {"std_error", bloch_json(row.std_error)},
                            {"p_branch", row.p_branch},
                            {"p_branch_exact", row.p_branch_exact},
                            {"n_eff", row.n_eff},
                            {"n_eff_exact", row.n_eff_exact},
                            {"flagged_5sigma", row.flagged}});
        }
        e["rows"] = rows;
        points.push_back(e);
    }
    j["flagged_rows"] = flagged;
    j["warnings"] = rep.warnings;
    j["points"] = points;
    return j;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

/// Minimal line/dot chart grid; enough to eyeball the curves.
class SvgGrid {
  public:
    SvgGrid(int rows, int cols) : rows_(rows), cols_(cols) {}

    struct Series {
        std::vector<double> x, y;
        std::string color;
        bool dashed = false;
        bool dots = false;
    };

    void add(int row, int col, Series s, std::string title = {}) {
        auto &p = panels_[{row, col}];
        p.series.push_back(std::move(s));
        if (!title.empty()) {
            p.title = std::move(title);
        }
    }

    [[nodiscard]] std::string str(double xmin, double xmax, double ymin, double ymax) const {
        const int w = 260, hgt = 180, pad = 30;
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols_ * w << "\" height=\"" << rows_ * hgt
           << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
        for (const auto &[rc, p] : panels_) {
            const double ox = rc.second * w + pad;
            const double oy = rc.first * hgt + pad / 2.0;
            const double pw = w - 1.5 * pad;
            const double ph = hgt - 1.5 * pad;
            auto X = [&](double x) { return ox + (x - xmin) / (xmax - xmin) * pw; };
            auto Y = [&](double y) { return oy + (ymax - y) / (ymax - ymin) * ph; };
            os << "<rect x=\"" << fmt(ox) << "\" y=\"" << fmt(oy) << "\" width=\"" << fmt(pw) << "\" height=\""
               << fmt(ph) << "\" fill=\"none\" stroke=\"#888\"/>\n";
            os << "<text x=\"" << fmt(ox + 4) << "\" y=\"" << fmt(oy + 12) << "\">" << p.title << "</text>\n";
            for (const Series &s : p.series) {
                if (s.dots) {
                    for (std::size_t i = 0; i < s.x.size(); ++i) {
                        if (std::isfinite(s.y[i])) {
                            os << "<circle cx=\"" << fmt(X(s.x[i])) << "\" cy=\"" << fmt(Y(s.y[i]))
                               << "\" r=\"1.5\" fill=\"" << s.color << "\"/>\n";
                        }
                    }
                    continue;
                }
                os << "<polyline fill=\"none\" stroke=\"" << s.color << "\""
                   << (s.dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    os << fmt(X(s.x[i])) << ',' << fmt(Y(std::clamp(s.y[i], ymin, ymax))) << ' ';
                }
                os << "\"/>\n";
            }
        }
        os << "</svg>\n";
        return os.str();
    }

  private:
    struct Panel {
        std::string title;
        std::vector<Series> series;
    };
    int rows_, cols_;
    std::map<std::pair<int, int>, Panel> panels_;
};

inline const char *tag_color(const std::string &tag) {
    if (tag == "psi") return "#1f77b4";
    if (tag == "rho_psi") return "#d62728";
    return "#2ca02c";
}

/// Rows: r values. Columns: sx, sy, sz. Dots are seed averages, dashed lines the closed forms.
inline std::string figure2_svg(const RunReport &rep) {
    const ExperimentConfig &cfg = rep.config;
    SvgGrid g(static_cast<int>(cfg.r_values.size()), 3);
    const std::vector<double> dense = linspace(cfg.t0, cfg.t1, (cfg.steps - 1) * 4 + 1);
    for (std::size_t ri = 0; ri < cfg.r_values.size(); ++ri) {
        const Hamiltonian h = Hamiltonian::two_level(cfg.r_values[ri]);
        for (const char *tag : kStateTags) {
            std::array<SvgGrid::Series, 3> exact, dots;
            for (double t : dense) {
                const BlochVector b = three_state_expectations(psi_triple(h, t, cfg.psi0, cfg.t0)).at(tag);
                const double v[3] = {b.x, b.y, b.z};
                for (int c = 0; c < 3; ++c) {
                    exact[c].x.push_back(t);
                    exact[c].y.push_back(v[c]);
                }
            }
            for (std::size_t ti = 0; ti < rep.grid.size(); ++ti) {
                double acc[3] = {0, 0, 0};
                int n = 0;
                for (const Row &row : rep.at(ri, ti).rows) {
                    if (row.tag == tag) {
                        acc[0] += row.estimate.x;
                        acc[1] += row.estimate.y;
                        acc[2] += row.estimate.z;
                        ++n;
                    }
                }
                for (int c = 0; c < 3 && n > 0; ++c) {
                    dots[c].x.push_back(rep.grid[ti]);
                    dots[c].y.push_back(acc[c] / n);
                }
            }
            for (int c = 0; c < 3; ++c) {
                exact[c].color = dots[c].color = tag_color(tag);
                exact[c].dashed = true;
                dots[c].dots = true;
                const std::string title = "r = " + r_label(cfg.r_values[ri]) + "  s" + "xyz"[c];
                g.add(static_cast<int>(ri), c, exact[c], title);
                if (!dots[c].x.empty()) {
                    g.add(static_cast<int>(ri), c, dots[c]);
                }
            }
        }
    }
    return g.str(cfg.t0, cfg.t1, -1.05, 1.05);
}

/// Rows: r values. Left: rho_psi Bloch components. Right: rho / tr rho entries,
/// scaled by f = 0.8 for r >= 0.9 as a display aid only.
inline std::string figure3_svg(const RunReport &rep) {
    const ExperimentConfig &cfg = rep.config;
    SvgGrid g(static_cast<int>(cfg.r_values.size()), 2);
    const char *colors[3] = {"#1f77b4", "#d62728", "#2ca02c"};
    for (std::size_t ri = 0; ri < cfg.r_values.size(); ++ri) {
        const double f = cfg.r_values[ri] >= 0.9 ? 0.8 : 1.0;
        std::array<SvgGrid::Series, 3> bl, bd, me, mr;
        for (std::size_t ti = 0; ti < rep.grid.size(); ++ti) {
            const PointResult &p = rep.at(ri, ti);
            const BlochVector &e = p.exact.at("rho_psi");
            const double ev[3] = {e.x, e.y, e.z};
            const double mv[3] = {p.rho_normalized(0, 0).real(), p.rho_normalized(0, 1).real(),
                                  p.rho_normalized(0, 1).imag()};
            for (int c = 0; c < 3; ++c) {
                bl[c].x.push_back(p.t);
                bl[c].y.push_back(ev[c]);
                me[c].x.push_back(p.t);
                me[c].y.push_back(f * mv[c]);
            }
            for (const Row &row : p.rows) {
                if (row.tag == "rho_psi" && row.seed == cfg.seed_list().front()) {
                    const double v[3] = {row.estimate.x, row.estimate.y, row.estimate.z};
                    for (int c = 0; c < 3; ++c) {
                        bd[c].x.push_back(p.t);
                        bd[c].y.push_back(v[c]);
                    }
                }
            }
            if (p.rho_shots) {
                const Matrix &m = *p.rho_shots;
                const double v[3] = {m(0, 0).real(), m(0, 1).real(), m(0, 1).imag()};
                for (int c = 0; c < 3; ++c) {
                    mr[c].x.push_back(p.t);
                    mr[c].y.push_back(f * v[c]);
                }
            }
        }
        const std::string r = "r = " + r_label(cfg.r_values[ri]);
        for (int c = 0; c < 3; ++c) {
            bl[c].color = bd[c].color = me[c].color = mr[c].color = colors[c];
            bd[c].dots = mr[c].dots = true;
            me[c].dashed = true;
            g.add(static_cast<int>(ri), 0, bl[c], r + "  rho psi (x, y, z)");
            g.add(static_cast<int>(ri), 1, me[c], r + "  rho/tr rho: 00, Re 01, Im 01");
            if (!bd[c].x.empty()) g.add(static_cast<int>(ri), 0, bd[c]);
            if (!mr[c].x.empty()) g.add(static_cast<int>(ri), 1, mr[c]);
        }
    }
    return g.str(cfg.t0, cfg.t1, -1.05, 1.05);
}

// ---------------------------------------------------------------------------
// entry points
// ---------------------------------------------------------------------------

inline std::vector<std::filesystem::path> write_run(const RunReport &rep) {
    const std::filesystem::path dir(rep.config.out_dir);
    std::vector<std::filesystem::path> out{dir / "rows.csv", dir / "report.json"};
    write_text(out[0], figure2_csv(rep));
    write_text(out[1], report_json(rep).dump(1) + "\n");
    return out;
}

inline std::vector<std::filesystem::path> figure2(const ExperimentConfig &cfg) {
    const RunReport rep = run(cfg);
    const std::filesystem::path dir(cfg.out_dir);
    std::vector<std::filesystem::path> out{dir / "figure2.csv", dir / "figure2_exact.csv"};
    write_text(out[0], figure2_csv(rep));
    write_text(out[1], figure2_exact_csv(cfg));
    if (cfg.emit_plots) {
        out.push_back(dir / "figure2.svg");
        write_text(out.back(), figure2_svg(rep));
    }
    return out;
}

/// figure3 data come from BoNd states, so any sampled scheme is switched to it.
inline ExperimentConfig figure3_config(ExperimentConfig cfg) {
    if (cfg.scheme != RunScheme::Exact) {
        cfg.scheme = RunScheme::BoNd;
    }
    return cfg;
}

inline std::vector<std::filesystem::path> figure3(const ExperimentConfig &cfg_in) {
    const ExperimentConfig cfg = figure3_config(cfg_in);
    const RunReport rep = run(cfg);
    const std::filesystem::path dir(cfg.out_dir);
    std::vector<std::filesystem::path> out;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (std::size_t ri = 0; ri < cfg.r_values.size(); ++ri) {
        out.push_back(dir / ("figure3_r" + r_label(cfg.r_values[ri]) + ".csv"));
        write_text(out.back(), figure3_csv(rep, ri));
        summary.push_back(summary_json(figure3_summary(rep, ri)));
    }
    out.push_back(dir / "figure3_summary.json");
    write_text(out.back(), summary.dump(1) + "\n");
    if (cfg.emit_plots) {
        out.push_back(dir / "figure3.svg");
        write_text(out.back(), figure3_svg(rep));
    }
    return out;
}

} // namespace nhd::experiment
