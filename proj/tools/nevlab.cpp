// nevlab: experiment runner.
//
//   nevlab run <config.json> [--out DIR]
//   nevlab validate <config.json>
//   nevlab plot <table.csv> --x r --y residual [--y ...] [--logx] [--logy] [--shade flagged] [-o out.svg]
//
// Exit codes: 0 success, 1 error (parse, schema, engine), 2 an assertion of
// the experiment failed (named on stderr).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "experiments.hpp"
#include "nevlab/parallel.hpp"

namespace fs = std::filesystem;
using namespace nevlab;
using namespace nevlab::cli;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

int cmd_run(const std::string& config, const std::string& out_override) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto doc = load_document(config);
  std::optional<SurfaceModel> surface;
  const Plan plan = prepare(doc, surface);
  const fs::path dir = out_override.empty() ? fs::path(plan.output) : fs::path(out_override);

  Outputs out;
  try {
    out = plan.run();
  } catch (const Error& e) {
    throw Error("experiment '" + plan.name + "' (" + plan.experiment + ") failed: " + e.what());
  }
  // all files are written here, after the engines have finished
  const json report = make_report(plan, out);
  write_file(dir / "report.json", report.dump(2) + "\n");
  for (const auto& [name, t] : out.tables) write_file(dir / "tables" / (name + ".csv"), t.to_csv());
  for (const auto& [name, svg] : out.plots) write_file(dir / "plots" / (name + ".svg"), svg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(dir / "timing.json",
             json{{"wall_clock_seconds", secs}, {"threads", thread_count()}}.dump(2) + "\n");

  int failures = 0;
  for (const auto& a : out.assertions) {
    if (a.pass) continue;
    std::cerr << "assertion failed: " << a.name << ": " << a.detail << "\n";
    ++failures;
  }
  std::cout << plan.experiment << " '" << plan.name << "': " << out.assertions.size() - failures << "/"
            << out.assertions.size() << " assertions passed; report written to " << (dir / "report.json").string()
            << "\n";
  return failures ? 2 : 0;
}

int cmd_validate(const std::string& config) {
  const auto doc = load_document(config);
  std::optional<SurfaceModel> surface;
  const Plan plan = prepare(doc, surface);
  std::cout << config << ": valid " << plan.experiment << " config\n";
  return 0;
}

int cmd_plot(const std::string& csv, PlotSpec spec, std::string output) {
  const Table t = read_csv(csv);
  if (spec.title.empty()) spec.title = fs::path(csv).stem().string();
  const std::string svg = plot_svg(t, spec);
  if (output.empty()) output = fs::path(csv).replace_extension(".svg").string();
  write_file(fs::absolute(output), svg);
  std::cout << "wrote " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nevlab: numerical Nevanlinna theory experiments"};
  app.set_version_flag("--version", std::string("nevlab ") + version);
  app.require_subcommand(1);

  std::string config, out_dir;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config, "config file (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config's \"output\")");

  auto* validate = app.add_subcommand("validate", "check a config file without running it");
  validate->add_option("config", config, "config file (JSON)")->required();

  std::string csv, plot_out;
  PlotSpec spec;
  spec.y.clear();
  auto* plot = app.add_subcommand("plot", "draw columns of a CSV table as an SVG line plot");
  plot->add_option("csv", csv, "table written by `run`")->required();
  plot->add_option("--x", spec.x, "x column")->capture_default_str();
  plot->add_option("--y", spec.y, "y column (repeatable)")->required();
  plot->add_flag("--logx", spec.log_x, "logarithmic x axis");
  plot->add_flag("--logy", spec.log_y, "logarithmic y axis");
  plot->add_option("--shade", spec.shade, "shade rows where this column is non-zero");
  plot->add_option("--title", spec.title, "plot title");
  plot->add_option("-o,--output", plot_out, "output SVG (default: the CSV path with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config, out_dir);
    if (*validate) return cmd_validate(config);
    return cmd_plot(csv, spec, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
