#include "twoscale/trajectory.hpp"

#include <fstream>
#include <stdexcept>

#include "twoscale/io_util.hpp"

namespace twoscale {

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  CsvWriter csv(path);
  std::vector<std::string> head{"t"};
  const int nu = traj.has_u() ? static_cast<int>(traj.u[0].size()) : 0;
  const int nv = traj.has_v() ? static_cast<int>(traj.v[0].size()) : 0;
  for (int k = 1; k <= nu; ++k) head.push_back("u_" + std::to_string(k));
  for (int k = 1; k <= nv; ++k) head.push_back("v_" + std::to_string(k));
  csv.header(head);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i]};
    for (int k = 0; k < nu; ++k) row.push_back(traj.u[i][k]);
    for (int k = 0; k < nv; ++k) row.push_back(traj.v[i][k]);
    csv.row_values(row);
  }
}

void write_trajectory_binary(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const int nu = traj.has_u() ? static_cast<int>(traj.u[0].size()) : 0;
  const int nv = traj.has_v() ? static_cast<int>(traj.v[0].size()) : 0;
  nlohmann::json header;
  header["rows"] = traj.times.size();
  header["cols"] = 1 + nu + nv;
  header["layout"] = "row-major float64: t, u_1..u_N, v_1..v_N";
  header["dt"] = traj.dt;
  header["eps"] = traj.eps;
  out << header.dump() << '\n';
  auto put = [&](double x) {
    out.write(reinterpret_cast<const char*>(&x), sizeof(double));
  };
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    put(traj.times[i]);
    for (int k = 0; k < nu; ++k) put(traj.u[i][k]);
    for (int k = 0; k < nv; ++k) put(traj.v[i][k]);
  }
}

}  // namespace twoscale
