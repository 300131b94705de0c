/**
 * @file field_io.hpp
 * @brief CSV and binary field dumps.
 *
 * Binary layout (little-endian):
 *   char[4] "EKBL", u32 version = 1, u32 n_modes, u32 n_z, u32 n_fields,
 *   f64 period, f64 z[n_z],
 *   then per field, per mode m, per node j: f64 re, f64 im.
 * Fields, in order: v1 v2 v3 dz_v1 dz_v2 dz_v3 p omega.
 */
#pragma once

#include "ekbl/grid.hpp"
#include "ekbl/strip.hpp"

#include <string>

namespace ekbl {

constexpr unsigned kEkblVersion = 1;

void write_ekbl(const std::string& path, const FlowField& f, const SpectralGrid& g);
/// Reads a dump; the grid is rebuilt from the stored period and nodes.
FlowField read_ekbl(const std::string& path, SpectralGrid& g);

/// Columns y1,y2,z,v1,v2,v3,p on the physical lattice, one z-slice in memory at a time.
/// `stride` > 1 keeps every stride-th node in z.
void write_flow_csv(const std::string& path, const FlowField& f, const SpectralGrid& g, int stride = 1,
                    double z_offset = 0.0);
/// Same columns for the strip; y3 is the physical height, pressure interpolated to the velocity levels.
void write_strip_csv(const std::string& path, const StripField& f, const StripGrid& g);

/// Plain two-or-more column table with a header line.
void write_columns(const std::string& path, const std::vector<std::string>& header,
                   const std::vector<Eigen::VectorXd>& columns);

}  // namespace ekbl
