#include "artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace matrixrl {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (long i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = j.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j.at(i).size() != cols) throw std::invalid_argument("instance json: ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<long>(i), static_cast<long>(k)) =
        j.at(i).at(k).get<double>();
  }
  return m;
}

std::string format_sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

nlohmann::json instance_to_json(const TaskFamily& family) {
  nlohmann::json j;
  j["schema"] = "matrixrl-instance-v1";
  j["config"] = {
      {"n_states", family.config.n_states}, {"n_actions", family.config.n_actions},
      {"d", family.config.d},               {"d_prime", family.config.d_prime},
      {"r", family.config.r},               {"P", family.config.P},
      {"seed", family.config.seed},         {"phi_alpha", family.config.phi_alpha},
      {"mix_alpha", family.config.mix_alpha},
      {"anchor_alpha", family.config.anchor_alpha},
      {"reward_density", family.config.reward_density},
      {"start_mode", family.config.start_mode}};
  j["constants"] = {{"L_phi", family.features.L_phi},
                    {"L_psi", family.features.L_psi},
                    {"C_psi", family.features.C_psi},
                    {"C_psi_prime", family.features.C_psi_prime},
                    {"S_bound", family.S_bound}};
  j["phi"] = matrix_to_json(family.features.phi);
  j["psi"] = matrix_to_json(family.features.psi);
  j["B_star"] = matrix_to_json(family.B_star);
  nlohmann::json a_list = nlohmann::json::array(), m_list = nlohmann::json::array(),
                 r_list = nlohmann::json::array();
  for (int p = 0; p < family.task_count(); ++p) {
    a_list.push_back(matrix_to_json(family.A_star[static_cast<std::size_t>(p)]));
    m_list.push_back(matrix_to_json(family.cores[static_cast<std::size_t>(p)].M));
    r_list.push_back(matrix_to_json(family.rewards[static_cast<std::size_t>(p)]));
  }
  j["A_star"] = std::move(a_list);
  j["M"] = std::move(m_list);
  j["rewards"] = std::move(r_list);
  return j;
}

TaskFamily instance_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "matrixrl-instance-v1")
    throw std::invalid_argument("instance json: unknown schema");
  TaskFamily fam;
  const auto& c = j.at("config");
  fam.config.n_states = c.at("n_states").get<int>();
  fam.config.n_actions = c.at("n_actions").get<int>();
  fam.config.d = c.at("d").get<int>();
  fam.config.d_prime = c.at("d_prime").get<int>();
  fam.config.r = c.at("r").get<int>();
  fam.config.P = c.at("P").get<int>();
  fam.config.seed = c.at("seed").get<std::uint64_t>();
  fam.config.phi_alpha = c.at("phi_alpha").get<double>();
  fam.config.mix_alpha = c.at("mix_alpha").get<double>();
  fam.config.anchor_alpha = c.at("anchor_alpha").get<double>();
  fam.config.reward_density = c.at("reward_density").get<double>();
  fam.config.start_mode = c.at("start_mode").get<std::string>();

  const auto& k = j.at("constants");
  fam.features = FeatureMaps::make(fam.config.n_states, fam.config.n_actions,
                                   matrix_from_json(j.at("phi")), matrix_from_json(j.at("psi")),
                                   k.at("L_phi").get<double>(), k.at("L_psi").get<double>());
  fam.S_bound = k.at("S_bound").get<double>();
  fam.B_star = matrix_from_json(j.at("B_star"));
  for (const auto& a : j.at("A_star")) fam.A_star.push_back(matrix_from_json(a));
  for (const auto& m : j.at("M")) fam.cores.push_back(TransitionCore{matrix_from_json(m), fam.S_bound});
  for (const auto& r : j.at("rewards")) fam.rewards.push_back(matrix_from_json(r));
  if (static_cast<int>(fam.cores.size()) != fam.config.P)
    throw std::invalid_argument("instance json: task count mismatch");
  fam.validate();
  return fam;
}

void save_instance(const TaskFamily& family, const std::string& path) {
  write_text_file(path, instance_to_json(family).dump(2) + "\n");
}

TaskFamily load_instance(const std::string& path) {
  return instance_from_json(nlohmann::json::parse(read_text_file(path)));
}

nlohmann::json estimate_to_json(const SharedEstimate& est) {
  nlohmann::json j;
  j["schema"] = "matrixrl-estimate-v1";
  j["B"] = matrix_to_json(est.B);
  nlohmann::json a_list = nlohmann::json::array();
  for (const auto& A : est.A) a_list.push_back(matrix_to_json(A));
  j["A"] = std::move(a_list);
  j["objective_trace"] = est.objective_trace;
  j["converged"] = est.converged;
  nlohmann::json grams = nlohmann::json::array();
  for (const auto& g : est.grams)
    grams.push_back({{"sigma", matrix_to_json(g.sigma())},
                     {"target", matrix_to_json(g.target())},
                     {"target_sq_norm", g.target_sq_norm()},
                     {"count", g.count()}});
  j["grams"] = std::move(grams);
  return j;
}

SharedEstimate estimate_from_json(const nlohmann::json& j, double lambda) {
  if (j.value("schema", "") != "matrixrl-estimate-v1")
    throw std::invalid_argument("estimate json: unknown schema");
  SharedEstimate est;
  est.B = matrix_from_json(j.at("B"));
  for (const auto& a : j.at("A")) est.A.push_back(matrix_from_json(a));
  est.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  est.converged = j.at("converged").get<bool>();
  for (const auto& g : j.at("grams"))
    est.grams.push_back(GramState::from_parts(
        matrix_from_json(g.at("sigma")), matrix_from_json(g.at("target")), lambda,
        g.at("target_sq_norm").get<double>(), g.at("count").get<int>()));
  if (est.A.size() != est.grams.size())
    throw std::invalid_argument("estimate json: task count mismatch");
  return est;
}

nlohmann::json audit_report_to_json(const AuditReport& r) {
  const double threshold = r.delta + 0.05;  // binomial slack over the delta budget
  nlohmann::json j;
  j["delta"] = r.delta;
  j["runs"] = r.runs;
  j["episodes"] = r.episodes;
  j["optimism_checked"] = r.optimism_checked;
  j["coverage"] = {
      {"single",
       {{"pairs", r.single_coverage.pairs},
        {"violations", r.single_coverage.violations},
        {"rate", r.single_coverage.rate()},
        {"threshold", threshold},
        {"pass", r.single_coverage.rate() <= threshold}}},
      {"shared",
       {{"pairs", r.shared_coverage.pairs},
        {"violations", r.shared_coverage.violations},
        {"rate", r.shared_coverage.rate()},
        {"threshold", threshold},
        {"pass", r.shared_coverage.rate() <= threshold}}}};
  j["optimism"] = {
      {"single",
       {{"checked", r.single_optimism_checked},
        {"violations", r.single_optimism_violations},
        {"pass", r.single_optimism_violations == 0}}},
      {"shared",
       {{"checked", r.shared_optimism_checked},
        {"violations", r.shared_optimism_violations},
        {"pass", r.shared_optimism_violations == 0}}}};
  j["bellman"] = {{"checked", r.bellman_checked},
                  {"violations", r.bellman_violations},
                  {"worst_margin", r.bellman_checked == 0 ? 0.0 : r.bellman_worst_margin},
                  {"pass", r.bellman_violations == 0}};
  j["martingale"] = {{"streams", r.martingale_streams},
                     {"within", r.martingale_within},
                     {"fraction", r.martingale_fraction()},
                     {"threshold", 0.9},
                     {"pass", r.martingale_fraction() >= 0.9}};
  j["det_lemma"] = {{"trials", r.det_trials},
                    {"failures", r.det_failures},
                    {"pass", r.det_failures == 0}};
  j["lazy_det_lemma"] = {{"trials", r.lazy_trials},
                         {"failures", r.lazy_failures},
                         {"pass", r.lazy_failures == 0}};
  j["quad_det"] = {{"trials", r.quad_trials},
                   {"failures", r.quad_failures},
                   {"pass", r.quad_failures == 0}};
  return j;
}

std::string regret_csv(const RegretTrace& traces, const std::vector<std::string>& algorithms,
                       const std::vector<std::uint64_t>& seeds) {
  std::ostringstream out;
  out << "algorithm,seed,episode,instant_regret,cum_regret\r\n";
  for (const auto& algo : algorithms) {
    const auto it = traces.instant.find(algo);
    if (it == traces.instant.end()) continue;
    const auto& cum = traces.cumulative.at(algo);
    for (std::size_t si = 0; si < it->second.size(); ++si) {
      for (std::size_t n = 0; n < it->second[si].size(); ++n) {
        out << algo << ',' << seeds[si] << ',' << (n + 1) << ','
            << format_sig12(it->second[si][n]) << ',' << format_sig12(cum[si][n]) << "\r\n";
      }
    }
  }
  return out.str();
}

std::string regret_svg(const RegretTrace& traces, const std::vector<std::string>& algorithms) {
  constexpr double W = 880, Hpx = 560;
  constexpr double ml = 70, mr = 180, mt = 30, mb = 50;
  const double pw = W - ml - mr, ph = Hpx - mt - mb;

  struct Series {
    std::string name;
    std::vector<double> mean, lo, hi;
  };
  std::vector<Series> series;
  std::size_t N = 0;
  double ymax = 1e-12;
  for (const auto& algo : algorithms) {
    const auto it = traces.cumulative.find(algo);
    if (it == traces.cumulative.end() || it->second.empty()) continue;
    Series s;
    s.name = algo;
    N = std::max(N, it->second.front().size());
    s.mean.assign(N, 0.0);
    s.lo.assign(N, std::numeric_limits<double>::infinity());
    s.hi.assign(N, -std::numeric_limits<double>::infinity());
    for (const auto& trace : it->second) {
      for (std::size_t n = 0; n < trace.size(); ++n) {
        s.mean[n] += trace[n];
        s.lo[n] = std::min(s.lo[n], trace[n]);
        s.hi[n] = std::max(s.hi[n], trace[n]);
      }
    }
    for (std::size_t n = 0; n < N; ++n) s.mean[n] /= static_cast<double>(it->second.size());
    ymax = std::max(ymax, *std::max_element(s.hi.begin(), s.hi.end()));
    series.push_back(std::move(s));
  }

  const auto x_of = [&](std::size_t n) {
    return ml + (N <= 1 ? 0.0 : pw * static_cast<double>(n) / static_cast<double>(N - 1));
  };
  const auto y_of = [&](double v) { return mt + ph * (1.0 - v / ymax); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hpx
      << "\" viewBox=\"0 0 " << W << " " << Hpx << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << Hpx << "\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (mt + ph)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << (mt + ph) << "\" x2=\"" << (ml + pw) << "\" y2=\""
      << (mt + ph) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double fy = mt + ph * (1.0 - t / 5.0);
    const double val = ymax * t / 5.0;
    svg << "<line x1=\"" << (ml - 4) << "\" y1=\"" << format_coord(fy) << "\" x2=\"" << ml
        << "\" y2=\"" << format_coord(fy) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (ml - 8) << "\" y=\"" << format_coord(fy + 4)
        << "\" text-anchor=\"end\" font-size=\"12\">" << format_sig12(std::round(val * 100) / 100)
        << "</text>\n";
    const std::size_t ep = N <= 1 ? 1 : 1 + static_cast<std::size_t>(
                                             std::llround((N - 1) * t / 5.0));
    const double fx = ml + pw * t / 5.0;
    svg << "<line x1=\"" << format_coord(fx) << "\" y1=\"" << (mt + ph) << "\" x2=\""
        << format_coord(fx) << "\" y2=\"" << (mt + ph + 4) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << format_coord(fx) << "\" y=\"" << (mt + ph + 18)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << ep << "</text>\n";
  }
  svg << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << (Hpx - 10)
      << "\" text-anchor=\"middle\" font-size=\"13\">episode</text>\n";
  svg << "<text x=\"18\" y=\"" << (mt + ph / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (mt + ph / 2) << ")\">cumulative regret</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 5];
    if (N >= 1) {
      std::ostringstream band;
      band << "M " << format_coord(x_of(0)) << ' ' << format_coord(y_of(s.lo[0]));
      for (std::size_t n = 1; n < N; ++n)
        band << " L " << format_coord(x_of(n)) << ' ' << format_coord(y_of(s.lo[n]));
      for (std::size_t n = N; n-- > 0;)
        band << " L " << format_coord(x_of(n)) << ' ' << format_coord(y_of(s.hi[n]));
      band << " Z";
      svg << "<path d=\"" << band.str() << "\" fill=\"" << color
          << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
      for (std::size_t n = 0; n < N; ++n)
        svg << format_coord(x_of(n)) << ',' << format_coord(y_of(s.mean[n])) << ' ';
      svg << "\"/>\n";
    }
    const double ly = mt + 18 + 22 * static_cast<double>(k);
    svg << "<line x1=\"" << (ml + pw + 12) << "\" y1=\"" << format_coord(ly) << "\" x2=\""
        << (ml + pw + 40) << "\" y2=\"" << format_coord(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.8\"/>\n";
    svg << "<text x=\"" << (ml + pw + 46) << "\" y=\"" << format_coord(ly + 4)
        << "\" font-size=\"13\">" << s.name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace matrixrl
