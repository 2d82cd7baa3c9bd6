#include <cstdint>
#include <cstring>
#include <fstream>

#include "hklab/propagator.hpp"

namespace hklab {

namespace {
const char kMagic[6] = {'H', 'K', 'M', 'A', 'T', '1'};
}

json kernel_header(const KernelMatrix& k) {
  json j;
  j["s"] = k.s;
  j["t"] = k.t;
  j["rows"] = k.p.rows();
  j["cols"] = k.p.cols();
  j["schedule"] = k.schedule_id;
  j["scheme"] = k.scheme;
  j["grid"] = k.grid;
  if (k.domain) j["domain"] = {{"kind", "dirichlet"}, {"vertices", *k.domain}};
  else j["domain"] = {{"kind", "global"}};
  return j;
}

void write_kernel(const KernelMatrix& k, const std::string& path_prefix) {
  std::ofstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot write " + path_prefix + ".bin");
  bin.write(kMagic, sizeof kMagic);
  std::uint64_t r = static_cast<std::uint64_t>(k.p.rows()), c = static_cast<std::uint64_t>(k.p.cols());
  bin.write(reinterpret_cast<const char*>(&r), sizeof r);
  bin.write(reinterpret_cast<const char*>(&c), sizeof c);
  for (Eigen::Index i = 0; i < k.p.rows(); ++i)
    for (Eigen::Index j = 0; j < k.p.cols(); ++j) {
      double v = k.p(i, j);
      bin.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  std::ofstream hdr(path_prefix + ".json");
  if (!hdr) throw Error("cannot write " + path_prefix + ".json");
  hdr << kernel_header(k).dump(2) << "\n";
}

KernelMatrix read_kernel(const std::string& path_prefix) {
  std::ifstream hdr(path_prefix + ".json");
  if (!hdr) throw Error("cannot read " + path_prefix + ".json");
  json j = json::parse(hdr);
  std::ifstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot read " + path_prefix + ".bin");
  char magic[6];
  bin.read(magic, sizeof magic);
  if (!bin || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error("not an HKMAT1 container: " + path_prefix);
  std::uint64_t r = 0, c = 0;
  bin.read(reinterpret_cast<char*>(&r), sizeof r);
  bin.read(reinterpret_cast<char*>(&c), sizeof c);
  KernelMatrix k;
  k.p.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < k.p.rows(); ++i)
    for (Eigen::Index jj = 0; jj < k.p.cols(); ++jj) bin.read(reinterpret_cast<char*>(&k.p(i, jj)), sizeof(double));
  if (!bin) throw Error("truncated kernel container: " + path_prefix);
  k.s = j.at("s").get<double>();
  k.t = j.at("t").get<double>();
  k.schedule_id = j.at("schedule").get<std::string>();
  k.scheme = j.at("scheme").get<std::string>();
  k.grid = j.at("grid").get<std::vector<double>>();
  if (j.at("domain").at("kind") == "dirichlet") k.domain = j["domain"]["vertices"].get<VertexSet>();
  return k;
}

}  // namespace hklab
