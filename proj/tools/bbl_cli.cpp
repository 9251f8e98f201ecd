// Command-line front end: one subcommand per library operation.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "bbl/bbl.hpp"

namespace {

using namespace bbl;

std::ostream& precise(std::ostream& os) {
  return os << std::setprecision(std::numeric_limits<double>::max_digits10);
}

/// Writes to `path`, or to stdout when path is empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
}

void write_report_csv(std::ostream& os, const StabilityReport& r) {
  precise(os);
  os << "delta,shift_0,shift_1,symdiff_distance,linear_gap,main_distance,ratio_sqrt,ratio_linear,ratio_main,"
        "shave_removed,violations,masses_match,witness_vanished,valid\n";
  os << r.delta << ',' << r.best_shift[0] << ',' << r.best_shift[1] << ',' << r.symdiff_distance << ','
     << r.linear_gap << ',' << r.main_distance << ',' << r.ratio_sqrt << ',' << r.ratio_linear << ','
     << r.ratio_main << ',' << r.shave_removed << ',' << r.hypothesis_violations << ','
     << (r.masses_match ? 1 : 0) << ',' << (r.witness_vanished ? 1 : 0) << ',' << (r.valid() ? 1 : 0) << '\n';
}

struct Common {
  std::string f, g, h;
  std::string lambda = "1/2";
  double p = 0.0;
  double c = -1.0;
  std::string report;
  std::string witness;

  MeanParams params(int n) const { return MeanParams(Ratio::parse(lambda), p, n); }
  double shave_c(const MeanParams& mp) const { return c > 0.0 ? c : default_shave_constant(mp); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sup-convolutions, p-concave hulls, transports and stability certificates on grids"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  int exit_code = 0;

  // supconv
  Common sc;
  std::string sc_out;
  auto* cmd_supconv = app.add_subcommand("supconv", "M*_{lambda,p}(f, g) on the combination grid");
  cmd_supconv->add_option("--f", sc.f, "first function (GFN)")->required();
  cmd_supconv->add_option("--g", sc.g, "second function (GFN)")->required();
  cmd_supconv->add_option("--lambda", sc.lambda, "weight a/b in (0, 1/2]");
  cmd_supconv->add_option("--p", sc.p, "mean exponent");
  cmd_supconv->add_option("--out", sc_out, "output GFN (default stdout)");
  cmd_supconv->callback([&] {
    const auto f = load_gfn(sc.f);
    const auto g = load_gfn(sc.g);
    const auto h = sup_convolution(f, g, sc.params(static_cast<int>(f.dim())));
    with_output(sc_out, [&](std::ostream& os) { write_gfn(os, h); });
  });

  // hull
  std::string hull_f, hull_out, hull_report;
  double hull_p = 0.0;
  auto* cmd_hull = app.add_subcommand("hull", "p-concave hull co_p(f)");
  cmd_hull->add_option("--f", hull_f, "input function (GFN)")->required();
  cmd_hull->add_option("--p", hull_p, "concavity exponent");
  cmd_hull->add_option("--out", hull_out, "hull output (GFN, default stdout)");
  cmd_hull->add_option("--report", hull_report, "CSV with gap mass and facets");
  cmd_hull->callback([&] {
    const auto f = load_gfn(hull_f);
    const auto res = p_concave_hull(f, hull_p);
    with_output(hull_out, [&](std::ostream& os) { write_gfn(os, res.hull); });
    if (!hull_report.empty()) {
      with_output(hull_report, [&](std::ostream& os) {
        precise(os);
        os << "mass_f,mass_hull,gap_mass,facets,p_concave\n";
        os << integral(f) << ',' << integral(res.hull) << ',' << res.gap_mass << ',' << res.facets.size() << ','
           << (is_p_concave(res.hull, hull_p).p_concave ? 1 : 0) << '\n';
        os << "facet,p,d,y\n";
        for (std::size_t i = 0; i < res.facets.size(); ++i) {
          const auto& pl = res.facets[i];
          os << i << ',' << pl.p << ',' << pl.d;
          for (double y : pl.y) os << ',' << y;
          os << '\n';
        }
      });
    }
  });

  // diagnose
  Common dg;
  double alpha = 0.1;
  std::string dg_out;
  auto* cmd_diag = app.add_subcommand("diagnose", "bad-height masses I_1..I_5 of the level-set diagnostics");
  cmd_diag->add_option("--f", dg.f)->required();
  cmd_diag->add_option("--g", dg.g)->required();
  cmd_diag->add_option("--h", dg.h, "h (default: the sup-convolution of f and g)");
  cmd_diag->add_option("--lambda", dg.lambda);
  cmd_diag->add_option("--p", dg.p);
  cmd_diag->add_option("--alpha", alpha, "threshold in (0, 1)");
  cmd_diag->add_option("--out", dg_out, "CSV output (default stdout)");
  cmd_diag->callback([&] {
    const auto f = load_gfn(dg.f);
    const auto g = load_gfn(dg.g);
    const auto mp = dg.params(static_cast<int>(f.dim()));
    const bool given = !dg.h.empty();
    const auto h = given ? load_gfn(dg.h) : sup_convolution(f, g, mp);
    const auto rep = level_diagnostics(f, g, h, mp, alpha);
    with_output(dg_out, [&](std::ostream& os) {
      precise(os);
      os << "alpha,h_convention,mass_f,I1,I2,I3,I4,I5,bad_mass,hull_gap_integral,height_intervals\n";
      os << rep.alpha << ',' << (given ? "user" : "supconv") << ',' << rep.mass_f;
      for (double m : rep.masses) os << ',' << m;
      os << ',' << rep.bad_mass << ',' << rep.hull_gap_integral << ',' << rep.height_intervals << '\n';
    });
  });

  // certifiers
  auto add_cert = [&](const std::string& name, const std::string& help, Common& o, bool needs_g) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--f", o.f)->required();
    if (needs_g) cmd->add_option("--g", o.g)->required();
    cmd->add_option("--h", o.h, "h (default: the sup-convolution)");
    cmd->add_option("--lambda", o.lambda);
    cmd->add_option("--p", o.p);
    cmd->add_option("--c", o.c, "shaving constant (default 0.1 lambda)");
    cmd->add_option("--report", o.report, "CSV output (default stdout)");
    cmd->add_option("--witness", o.witness, "write the witness l as GFN");
    return cmd;
  };
  Common cs, cl, cm;
  add_cert("certify-symdiff", "best translation and symmetric-difference distance", cs, true)->callback([&] {
    const auto f = load_gfn(cs.f);
    const auto g = load_gfn(cs.g);
    const auto mp = cs.params(static_cast<int>(f.dim()));
    const auto h = cs.h.empty() ? sup_convolution(f, g, mp) : load_gfn(cs.h);
    const auto rep = certify_symmetric_difference(f, g, h, mp);
    with_output(cs.report, [&](std::ostream& os) { write_report_csv(os, rep); });
    if (!rep.valid()) exit_code = 2;
  });
  add_cert("certify-linear", "shaved p-concave witness and linear gap", cl, false)->callback([&] {
    const auto f = load_gfn(cl.f);
    const auto mp = cl.params(static_cast<int>(f.dim()));
    std::optional<GridFunction> h;
    if (!cl.h.empty()) h = load_gfn(cl.h);
    const auto rep = certify_linear(f, h, mp, cl.shave_c(mp));
    with_output(cl.report, [&](std::ostream& os) { write_report_csv(os, rep); });
    if (!cl.witness.empty()) save_gfn(cl.witness, rep.witness);
    if (!rep.valid()) exit_code = 2;
  });
  add_cert("certify-main", "translation plus common p-concave witness", cm, true)->callback([&] {
    const auto f = load_gfn(cm.f);
    const auto g = load_gfn(cm.g);
    const auto mp = cm.params(static_cast<int>(f.dim()));
    const auto h = cm.h.empty() ? sup_convolution(f, g, mp) : load_gfn(cm.h);
    const auto rep = certify_main(f, g, h, mp, cm.shave_c(mp));
    with_output(cm.report, [&](std::ostream& os) { write_report_csv(os, rep); });
    if (!cm.witness.empty()) save_gfn(cm.witness, rep.witness);
    if (!rep.valid()) exit_code = 2;
  });

  // sweep
  SweepConfig cfg;
  std::string family = "sharpness", delta_grid = "1e-4:1e-2:log5", sw_lambda = "1/2", sw_out, h_conv = "supconv";
  auto* cmd_sweep = app.add_subcommand("sweep", "scenario family sweep over delta0 (CSV)");
  cmd_sweep->add_option("--family", family, "sharpness | dented | perturbed");
  cmd_sweep->add_option("--p", cfg.p);
  cmd_sweep->add_option("--lambda", sw_lambda);
  cmd_sweep->add_option("--delta0", delta_grid, "a:b:logN or a comma list");
  cmd_sweep->add_option("--spacing", cfg.spacing);
  cmd_sweep->add_option("--c", cfg.c, "shaving constant (default 0.1 lambda)");
  cmd_sweep->add_option("--seed", cfg.seed);
  cmd_sweep->add_option("--h", h_conv, "supconv | generator (sharpness only)");
  cmd_sweep->add_flag("--timing", cfg.timing, "record wall time per row");
  cmd_sweep->add_option("--out", sw_out, "CSV output (default stdout)");
  cmd_sweep->callback([&] {
    cfg.family = parse_family(family);
    cfg.delta0 = parse_delta_grid(delta_grid);
    cfg.lambda = Ratio::parse(sw_lambda).value();
    if (h_conv == "supconv") {
      cfg.h_convention = HConvention::supconv;
    } else if (h_conv == "generator") {
      cfg.h_convention = HConvention::generator;
    } else {
      throw std::invalid_argument("unknown h convention '" + h_conv + "'");
    }
    const auto rows = sweep(cfg);
    with_output(sw_out, [&](std::ostream& os) { write_sweep_csv(os, rows); });
    for (const auto& r : rows) {
      if (!r.valid()) exit_code = 2;
    }
    if (rows.size() >= 4) {
      const auto fit = fit_symdiff_slope(rows);
      std::cerr << "symdiff slope " << fit.slope << " +- " << fit.stderr_slope << '\n';
    }
  });

  // equipartition
  std::string eq_f, cones = "regular";
  auto* cmd_eq = app.add_subcommand("equipartition", "apex splitting a 2-D function into three equal sector masses");
  cmd_eq->add_option("--f", eq_f)->required();
  cmd_eq->add_option("--cones", cones, "regular | quadrant");
  cmd_eq->callback([&] {
    const auto f = load_gfn(eq_f);
    const Cone2D cone = cones == "quadrant" ? Cone2D::quadrant() : Cone2D::regular();
    if (cones != "quadrant" && cones != "regular") throw std::invalid_argument("unknown cone family '" + cones + "'");
    const auto res = cone_equipartition_2d(f, cone);
    precise(std::cout);
    std::cout << "apex_x,apex_y,mass_0,mass_1,mass_2,residual,converged\n";
    std::cout << res.apex[0] << ',' << res.apex[1] << ',' << res.masses[0] << ',' << res.masses[1] << ','
              << res.masses[2] << ',' << res.residual << ',' << (res.converged ? 1 : 0) << '\n';
    if (!res.converged) exit_code = 2;
  });

  // gen
  std::string gen_kind = "sharpness", gen_out = "out";
  double gen_delta0 = 0.01, gen_spacing = 1e-3, gen_eps = 1e-6, gen_v = 50.0, gen_width = 0.05;
  auto* cmd_gen = app.add_subcommand("gen", "write scenario functions as GFN files");
  cmd_gen->add_option("--kind", gen_kind, "sharpness | two-bump | dented | indicator | hat | gaussian");
  cmd_gen->add_option("--delta0", gen_delta0);
  cmd_gen->add_option("--spacing", gen_spacing);
  cmd_gen->add_option("--eps", gen_eps);
  cmd_gen->add_option("--v", gen_v);
  cmd_gen->add_option("--width", gen_width, "hole width (dented)");
  cmd_gen->add_option("--out", gen_out, "output prefix; sharpness writes <prefix>_f/_g/_h.gfn");
  cmd_gen->callback([&] {
    if (gen_kind == "sharpness") {
      const auto t = gen_sharpness_pair(gen_delta0, gen_spacing);
      save_gfn(gen_out + "_f.gfn", t.f);
      save_gfn(gen_out + "_g.gfn", t.g);
      save_gfn(gen_out + "_h.gfn", t.h);
    } else if (gen_kind == "two-bump") {
      save_gfn(gen_out + ".gfn", gen_two_bump(gen_eps, gen_v, gen_spacing));
    } else if (gen_kind == "dented") {
      save_gfn(gen_out + ".gfn", gen_dented(gen_shape(Shape::indicator, gen_spacing), {Hole{{0.5}, gen_width, 1.0}}));
    } else {
      save_gfn(gen_out + ".gfn", gen_shape(parse_shape(gen_kind), gen_spacing));
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}
