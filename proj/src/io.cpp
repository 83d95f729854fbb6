#include "nsmt/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nsmt {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& val) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("non-numeric value '" + val + "' for key '" + key + "'");
  }
}

int parse_int(const std::string& key, const std::string& val) {
  const double x = parse_number(key, val);
  if (x != std::floor(x)) throw ConfigError("key '" + key + "' expects an integer, got '" + val + "'");
  return static_cast<int>(x);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for reading");
  return f;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path, std::size_t ncols) {
  std::ifstream f = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_number("csv cell", trim(cell)));
    if (row.size() != ncols)
      throw ConfigError("'" + path + "': expected " + std::to_string(ncols) + " columns, got " +
                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig pc;
  bool saw_nu = false, saw_L = false, saw_rho = false;
  std::string section;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header: " + line);
      section = trim(line.substr(1, line.size() - 2));
      if (section != "channel" && section != "numerics" && section != "optimizer")
        throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section == "channel") {
      if (key == "nu") { pc.channel.nu = parse_number(key, val); saw_nu = true; }
      else if (key == "L") { pc.channel.L = parse_number(key, val); saw_L = true; }
      else if (key == "a") pc.channel.a = parse_number(key, val);
      else if (key == "rho") { pc.channel.rho = parse_number(key, val); saw_rho = true; }
      else if (key == "C") pc.channel.C_const = parse_number(key, val);
      else if (key == "gamma_l1") pc.channel.gamma_l1 = parse_number(key, val);
      else if (key == "smallness_form") {
        if (val == "closed") pc.channel.smallness_form = SmallnessForm::closed_poiseuille;
        else if (val == "norms") pc.channel.smallness_form = SmallnessForm::profile_norms;
        else throw ConfigError("smallness_form must be 'closed' or 'norms', got '" + val + "'");
      }
      else throw ConfigError("unknown key '" + key + "' in section [channel]");
    } else if (section == "numerics") {
      if (key == "Ny") pc.channel.Ny = parse_int(key, val);
      else if (key == "Nt") pc.channel.Nt = parse_int(key, val);
      else if (key == "Kmax") pc.channel.Kmax = parse_int(key, val);
      else if (key == "sigma") pc.channel.sigma = parse_number(key, val);
      else throw ConfigError("unknown key '" + key + "' in section [numerics]");
    } else if (section == "optimizer") {
      if (key == "eps_schedule") {
        pc.optimizer.eps_schedule.clear();
        std::stringstream ss(val);
        std::string cell;
        while (std::getline(ss, cell, ','))
          pc.optimizer.eps_schedule.push_back(parse_number(key, trim(cell)));
      }
      else if (key == "tol_terminal_rel") pc.optimizer.tol_terminal_rel = parse_number(key, val);
      else if (key == "T_min") pc.optimizer.T_min = parse_number(key, val);
      else if (key == "T_init") pc.optimizer.T_init = parse_number(key, val);
      else if (key == "T_max") pc.optimizer.T_max = parse_number(key, val);
      else if (key == "max_iters") pc.optimizer.max_iters = parse_int(key, val);
      else if (key == "feas_iters") pc.optimizer.feas_iters = parse_int(key, val);
      else if (key == "polish_passes") pc.optimizer.polish_passes = parse_int(key, val);
      else if (key == "grad_tol") pc.optimizer.grad_tol = parse_number(key, val);
      else if (key == "use_time_descent") pc.optimizer.use_time_descent = parse_int(key, val) != 0;
      else if (key == "bisect_rel_tol") pc.optimizer.bisect_rel_tol = parse_number(key, val);
      else throw ConfigError("unknown key '" + key + "' in section [optimizer]");
    } else {
      throw ConfigError("key '" + key + "' appears before any section header");
    }
  }
  if (!saw_nu) throw ConfigError("missing required key 'nu' in [channel]");
  if (!saw_L) throw ConfigError("missing required key 'L' in [channel]");
  if (!saw_rho) throw ConfigError("missing required key 'rho' in [channel]");
  pc.channel.validate();
  pc.optimizer.validate();
  return pc;
}

ParsedConfig parse_config(const std::string& path) {
  std::ifstream f = open_in(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const ParsedConfig& pc) {
  std::ostringstream o;
  o << "[channel]\n";
  o << "nu = " << fmt(pc.channel.nu) << "\n";
  o << "L = " << fmt(pc.channel.L) << "\n";
  o << "a = " << fmt(pc.channel.a) << "\n";
  o << "rho = " << fmt(pc.channel.rho) << "\n";
  o << "C = " << fmt(pc.channel.C_const) << "\n";
  o << "gamma_l1 = " << fmt(pc.channel.gamma_l1) << "\n";
  o << "smallness_form = "
    << (pc.channel.smallness_form == SmallnessForm::closed_poiseuille ? "closed" : "norms") << "\n";
  o << "[numerics]\n";
  o << "Ny = " << pc.channel.Ny << "\n";
  o << "Nt = " << pc.channel.Nt << "\n";
  o << "Kmax = " << pc.channel.Kmax << "\n";
  o << "sigma = " << fmt(pc.channel.sigma) << "\n";
  o << "[optimizer]\n";
  o << "eps_schedule = ";
  for (std::size_t i = 0; i < pc.optimizer.eps_schedule.size(); ++i)
    o << (i ? "," : "") << fmt(pc.optimizer.eps_schedule[i]);
  o << "\n";
  o << "tol_terminal_rel = " << fmt(pc.optimizer.tol_terminal_rel) << "\n";
  o << "T_min = " << fmt(pc.optimizer.T_min) << "\n";
  o << "T_init = " << fmt(pc.optimizer.T_init) << "\n";
  o << "T_max = " << fmt(pc.optimizer.T_max) << "\n";
  o << "max_iters = " << pc.optimizer.max_iters << "\n";
  o << "feas_iters = " << pc.optimizer.feas_iters << "\n";
  o << "polish_passes = " << pc.optimizer.polish_passes << "\n";
  o << "grad_tol = " << fmt(pc.optimizer.grad_tol) << "\n";
  o << "use_time_descent = " << (pc.optimizer.use_time_descent ? 1 : 0) << "\n";
  o << "bisect_rel_tol = " << fmt(pc.optimizer.bisect_rel_tol) << "\n";
  return o.str();
}

void write_grid_function_csv(const std::string& path, const GridFunction& f, const Grid& grid) {
  if (static_cast<int>(f.size()) != grid.nodes())
    throw DomainError("write_grid_function_csv: length mismatch");
  std::ofstream o = open_out(path);
  o << "# j,y,re,im\n";
  for (int j = 0; j < grid.nodes(); ++j)
    o << j << "," << fmt(grid.y(j)) << "," << fmt(f[j].real()) << "," << fmt(f[j].imag()) << "\n";
}

GridFunction read_grid_function_csv(const std::string& path, const Grid& grid) {
  const auto rows = read_csv_rows(path, 4);
  if (static_cast<int>(rows.size()) != grid.nodes())
    throw ConfigError("'" + path + "': node count does not match the grid");
  GridFunction f(grid.nodes());
  for (const auto& r : rows) {
    const int j = static_cast<int>(r[0]);
    if (j < 0 || j >= grid.nodes()) throw ConfigError("'" + path + "': node index out of range");
    f[j] = cplx(r[2], r[3]);
  }
  return f;
}

void write_control_csv(const std::string& path, const ControlTrajectory& w,
                       const std::string& time_scale) {
  std::ofstream o = open_out(path);
  o << "# time scale: " << time_scale << "\n";
  o << "# t,re_w,im_w\n";
  for (int n = 0; n <= w.nt(); ++n)
    o << fmt(static_cast<double>(n) / w.nt()) << "," << fmt(w[n].real()) << "," << fmt(w[n].imag())
      << "\n";
}

ControlTrajectory read_control_csv(const std::string& path) {
  const auto rows = read_csv_rows(path, 3);
  if (rows.size() < 2) throw ConfigError("'" + path + "': too few control samples");
  ControlTrajectory w;
  w.samples.reserve(rows.size());
  for (const auto& r : rows) w.samples.emplace_back(r[1], r[2]);
  return w;
}

void write_flux_csv(const std::string& path, const AdjointTrajectory& adj) {
  std::ofstream o = open_out(path);
  o << "# t,Re,Im  (nu-free boundary flux p'''(t,L), rescaled time)\n";
  const int nt = adj.nt();
  for (int n = 0; n <= nt; ++n)
    o << fmt(static_cast<double>(n) / nt) << "," << fmt(adj.boundary_flux[n].real()) << ","
      << fmt(adj.boundary_flux[n].imag()) << "\n";
}

std::vector<cplx> read_flux_csv(const std::string& path) {
  const auto rows = read_csv_rows(path, 3);
  std::vector<cplx> f;
  f.reserve(rows.size());
  for (const auto& r : rows) f.emplace_back(r[1], r[2]);
  return f;
}

void write_spectrum_csv(const std::string& path, const ModeSpectrum& sp) {
  std::ofstream o = open_out(path);
  o << "# k,j,re_u,im_u,re_v,im_v\n";
  o << "# Kmax=" << sp.Kmax << " Ny=" << sp.grid.Ny << " L=" << fmt(sp.grid.L) << "\n";
  for (const auto& [k, vk] : sp.v0) {
    const GridFunction& uk = sp.u0.at(k);
    for (int j = 0; j < sp.grid.nodes(); ++j)
      o << k << "," << j << "," << fmt(uk[j].real()) << "," << fmt(uk[j].imag()) << ","
        << fmt(vk[j].real()) << "," << fmt(vk[j].imag()) << "\n";
  }
}

ModeSpectrum read_spectrum_csv(const std::string& path, const Grid& grid) {
  const auto rows = read_csv_rows(path, 6);
  ModeSpectrum sp;
  sp.grid = grid;
  for (const auto& r : rows) {
    const int k = static_cast<int>(r[0]);
    const int j = static_cast<int>(r[1]);
    if (k == 0) throw ConfigError("'" + path + "': mode k = 0 is not allowed in a spectrum");
    if (j < 0 || j >= grid.nodes()) throw ConfigError("'" + path + "': node index out of range");
    auto& uk = sp.u0[k];
    auto& vk = sp.v0[k];
    if (uk.empty()) uk.assign(grid.nodes(), cplx(0.0));
    if (vk.empty()) vk.assign(grid.nodes(), cplx(0.0));
    uk[j] = cplx(r[2], r[3]);
    vk[j] = cplx(r[4], r[5]);
    sp.Kmax = std::max(sp.Kmax, std::abs(k));
  }
  return sp;
}

void write_field_csv(const std::string& path, const FlowFieldSamples& f) {
  std::ofstream o = open_out(path);
  o << "# i,j,x,y,u,v\n";
  for (int i = 0; i < f.Nx; ++i)
    for (int j = 0; j < f.grid.nodes(); ++j)
      o << i << "," << j << "," << fmt(2.0 * M_PI * i / f.Nx) << "," << fmt(f.grid.y(j)) << ","
        << fmt(f.get_u(i, j)) << "," << fmt(f.get_v(i, j)) << "\n";
}

FlowFieldSamples read_field_csv(const std::string& path) {
  const auto rows = read_csv_rows(path, 6);
  int nx = 0, ny = 0;
  double max_y = 0.0;
  for (const auto& r : rows) {
    nx = std::max(nx, static_cast<int>(r[0]) + 1);
    ny = std::max(ny, static_cast<int>(r[1]) + 1);
    max_y = std::max(max_y, r[3]);
  }
  if (nx < 2 || ny < 9) throw ConfigError("'" + path + "': field grid too small");
  FlowFieldSamples f;
  f.Nx = nx;
  f.grid = Grid(ny - 1, max_y);
  f.u.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  f.v.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  for (const auto& r : rows) {
    f.at_u(static_cast<int>(r[0]), static_cast<int>(r[1])) = r[4];
    f.at_v(static_cast<int>(r[0]), static_cast<int>(r[1])) = r[5];
  }
  return f;
}

namespace {
constexpr char kMagic[4] = {'N', 'S', 'M', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_array_bin(const std::string& path, const BinArray& arr) {
  if (arr.dims.empty() || arr.dims.size() > 4) throw DomainError("write_array_bin: 1..4 dims");
  std::uint64_t count = 1;
  for (std::uint64_t d : arr.dims) count *= d;
  const std::uint64_t expect = count * (arr.is_complex ? 2 : 1);
  if (arr.real_data.size() != expect) throw DomainError("write_array_bin: data size mismatch");

  std::ofstream o = open_out(path);
  char header[64] = {0};
  std::memcpy(header, kMagic, 4);
  const std::uint32_t ver = kVersion, kind = arr.is_complex ? 1 : 0,
                      nd = static_cast<std::uint32_t>(arr.dims.size());
  std::memcpy(header + 4, &ver, 4);
  std::memcpy(header + 8, &kind, 4);
  std::memcpy(header + 12, &nd, 4);
  for (std::size_t i = 0; i < arr.dims.size(); ++i) std::memcpy(header + 16 + 8 * i, &arr.dims[i], 8);
  o.write(header, 64);
  o.write(reinterpret_cast<const char*>(arr.real_data.data()),
          static_cast<std::streamsize>(arr.real_data.size() * sizeof(double)));
}

BinArray read_array_bin(const std::string& path) {
  std::ifstream f = open_in(path);
  char header[64];
  f.read(header, 64);
  if (f.gcount() != 64 || std::memcmp(header, kMagic, 4) != 0)
    throw ConfigError("'" + path + "': not an NSMT array file");
  std::uint32_t ver, kind, nd;
  std::memcpy(&ver, header + 4, 4);
  std::memcpy(&kind, header + 8, 4);
  std::memcpy(&nd, header + 12, 4);
  if (ver != kVersion) throw ConfigError("'" + path + "': unsupported format version");
  if (nd < 1 || nd > 4) throw ConfigError("'" + path + "': bad dimension count");
  BinArray arr;
  arr.is_complex = kind == 1;
  arr.dims.resize(nd);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < nd; ++i) {
    std::memcpy(&arr.dims[i], header + 16 + 8 * i, 8);
    count *= arr.dims[i];
  }
  arr.real_data.resize(count * (arr.is_complex ? 2 : 1));
  f.read(reinterpret_cast<char*>(arr.real_data.data()),
         static_cast<std::streamsize>(arr.real_data.size() * sizeof(double)));
  if (static_cast<std::uint64_t>(f.gcount()) != arr.real_data.size() * sizeof(double))
    throw ConfigError("'" + path + "': truncated array file");
  return arr;
}

void write_trajectory_bin(const std::string& path, const ModeTrajectory& traj) {
  BinArray arr;
  arr.is_complex = true;
  arr.dims = {static_cast<std::uint64_t>(traj.states.size()),
              static_cast<std::uint64_t>(traj.grid.nodes())};
  arr.real_data.reserve(traj.states.size() * traj.grid.nodes() * 2);
  for (const GridFunction& s : traj.states)
    for (const cplx& z : s) {
      arr.real_data.push_back(z.real());
      arr.real_data.push_back(z.imag());
    }
  write_array_bin(path, arr);
}

ModeTrajectory read_trajectory_bin(const std::string& path, const Grid& grid) {
  const BinArray arr = read_array_bin(path);
  if (!arr.is_complex || arr.dims.size() != 2 ||
      arr.dims[1] != static_cast<std::uint64_t>(grid.nodes()))
    throw ConfigError("'" + path + "': trajectory shape does not match the grid");
  ModeTrajectory traj;
  traj.grid = grid;
  traj.states.resize(arr.dims[0]);
  std::size_t idx = 0;
  for (auto& s : traj.states) {
    s.resize(grid.nodes());
    for (cplx& z : s) {
      z = cplx(arr.real_data[idx], arr.real_data[idx + 1]);
      idx += 2;
    }
  }
  return traj;
}

void write_mode_pair(const std::string& dir, const OptimalModePair& pair) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_control_csv(dir + "/w_star.csv", pair.w_star);
  write_grid_function_csv(dir + "/v0.csv", pair.v0, pair.v_star.grid);
  write_trajectory_bin(dir + "/v_star.bin", pair.v_star);
  write_trajectory_bin(dir + "/p_star.bin",
                       ModeTrajectory{pair.k, pair.T_star, pair.p_star.grid, pair.p_star.states, {}});
  write_flux_csv(dir + "/flux.csv", pair.p_star);

  {
    std::ofstream o = open_out(dir + "/history.csv");
    o << "# stage,eps,T,terminal_residual,cost,w_v1_norm,iterations,converged\n";
    for (std::size_t s = 0; s < pair.history.size(); ++s) {
      const StageRecord& r = pair.history[s];
      o << s << "," << fmt(r.eps) << "," << fmt(r.T) << "," << fmt(r.terminal_residual) << ","
        << fmt(r.cost) << "," << fmt(r.w_v1_norm) << "," << r.iterations << ","
        << (r.converged ? 1 : 0) << "\n";
    }
  }

  json j;
  j["k"] = pair.k;
  j["T_star"] = pair.T_star;
  j["T_admissible"] = pair.T_admissible;
  j["alpha_star"] = pair.alpha_star;
  j["collinearity_residual"] = pair.collinearity_residual;
  j["terminal_residual"] = pair.terminal_residual;
  j["rho_k"] = pair.rho_k;
  j["converged"] = pair.converged;
  j["eps"] = pair.p_star.eps;
  j["files"] = {"w_star.csv", "v0.csv", "v_star.bin", "p_star.bin", "flux.csv", "history.csv"};
  std::ofstream o = open_out(dir + "/pair.json");
  o << j.dump(2) << "\n";
}

OptimalModePair read_mode_pair(const std::string& dir, const Grid& grid, const ChannelConfig& cfg) {
  std::ifstream jf = open_in(dir + "/pair.json");
  json j;
  jf >> j;
  OptimalModePair pair;
  pair.k = j.at("k").get<int>();
  pair.T_star = j.at("T_star").get<double>();
  pair.T_admissible = j.value("T_admissible", 0.0);
  pair.alpha_star = j.at("alpha_star").get<double>();
  pair.collinearity_residual = j.at("collinearity_residual").get<double>();
  pair.terminal_residual = j.at("terminal_residual").get<double>();
  pair.rho_k = j.at("rho_k").get<double>();
  pair.converged = j.at("converged").get<bool>();
  pair.w_star = read_control_csv(dir + "/w_star.csv");
  pair.v0 = read_grid_function_csv(dir + "/v0.csv", grid);
  pair.v_star = read_trajectory_bin(dir + "/v_star.bin", grid);
  pair.v_star.k = pair.k;
  pair.v_star.T = pair.T_star;

  pair.p_star.k = pair.k;
  pair.p_star.T = pair.T_star;
  pair.p_star.eps = j.value("eps", 0.0);
  pair.p_star.grid = grid;
  const ModeTrajectory p = read_trajectory_bin(dir + "/p_star.bin", grid);
  pair.p_star.states = p.states;
  pair.p_star.boundary_flux = read_flux_csv(dir + "/flux.csv");
  (void)cfg;
  return pair;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["command"] = m.command;
  j["timestamps"] = {{"started", m.started}, {"finished", m.finished}};
  j["config"] = config_to_text(m.config);
  j["artifacts"] = m.artifacts;
  json modes = json::object();
  for (const auto& [k, s] : m.mode_summaries) modes[std::to_string(k)] = s;
  j["modes"] = modes;
  std::ofstream o = open_out(path);
  o << j.dump(2) << "\n";
}

}  // namespace nsmt
