#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nsmt/assembly.hpp"

namespace nsmt {

struct ParsedConfig {
  ChannelConfig channel;
  PenaltyParams optimizer;
};

// Flat INI-style text with sections [channel], [numerics], [optimizer].
// Unknown keys are hard errors; nu, L and rho are required.
ParsedConfig parse_config_text(const std::string& text);
ParsedConfig parse_config(const std::string& path);

// --- CSV formats (17 significant digits; numeric round trips are exact) ---

void write_grid_function_csv(const std::string& path, const GridFunction& f, const Grid& grid);
GridFunction read_grid_function_csv(const std::string& path, const Grid& grid);

// columns t, re_w, im_w; the header comment names the time scale
void write_control_csv(const std::string& path, const ControlTrajectory& w,
                       const std::string& time_scale = "rescaled [0,1]");
ControlTrajectory read_control_csv(const std::string& path);

void write_flux_csv(const std::string& path, const AdjointTrajectory& adj);
std::vector<cplx> read_flux_csv(const std::string& path);

void write_spectrum_csv(const std::string& path, const ModeSpectrum& sp);
ModeSpectrum read_spectrum_csv(const std::string& path, const Grid& grid);

// columns i, j, x, y, u, v
void write_field_csv(const std::string& path, const FlowFieldSamples& f);
FlowFieldSamples read_field_csv(const std::string& path);

// --- raw little-endian float64 arrays with a 64-byte NSMT header ---

struct BinArray {
  bool is_complex = false;
  std::vector<std::uint64_t> dims;
  std::vector<double> real_data;  // interleaved (re, im) when complex
};

void write_array_bin(const std::string& path, const BinArray& arr);
BinArray read_array_bin(const std::string& path);

void write_trajectory_bin(const std::string& path, const ModeTrajectory& traj);
ModeTrajectory read_trajectory_bin(const std::string& path, const Grid& grid);

// --- per-mode result bundle (directory) and run manifest ---

void write_mode_pair(const std::string& dir, const OptimalModePair& pair);
OptimalModePair read_mode_pair(const std::string& dir, const Grid& grid, const ChannelConfig& cfg);

std::string config_to_text(const ParsedConfig& pc);

struct RunManifest {
  std::string format_version = "1";
  std::string command;
  std::string started;
  std::string finished;
  ParsedConfig config;
  std::vector<std::string> artifacts;
  std::map<int, std::string> mode_summaries;
};
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace nsmt
