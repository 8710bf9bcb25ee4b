#include "keyreader/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "keyreader/optim.hpp"

namespace krd::checkpoint {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'K', 'R', 'D', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

bool get_u32(std::istream& is, std::uint32_t& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return static_cast<bool>(is);
}

}  // namespace

Mat Entry::as_matrix() const {
  Index rows = 1, cols = 1;
  if (dims.size() == 1) {
    rows = 1;
    cols = static_cast<Index>(dims[0]);
  } else if (dims.size() == 2) {
    rows = static_cast<Index>(dims[0]);
    cols = static_cast<Index>(dims[1]);
  } else {
    throw ConfigError("checkpoint entry '" + name + "' has unsupported rank " +
                      std::to_string(dims.size()));
  }
  Mat m(rows, cols);
  std::memcpy(m.data(), values.data(), values.size() * sizeof(Scalar));
  return m;
}

Entry Entry::from_matrix(const std::string& name, const Mat& m) {
  Entry e;
  e.name = name;
  e.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  e.values.assign(m.data(), m.data() + m.size());
  return e;
}

void write_file(const std::string& path, const std::vector<Entry>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  for (const Entry& e : entries) {
    put_u32(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(os, static_cast<std::uint32_t>(e.dims.size()));
    std::size_t count = 1;
    for (std::uint32_t d : e.dims) {
      put_u32(os, d);
      count *= d;
    }
    if (count != e.values.size()) {
      throw ConfigError("checkpoint entry '" + e.name + "' dims do not match value count");
    }
    os.write(reinterpret_cast<const char*>(e.values.data()),
             static_cast<std::streamsize>(e.values.size() * sizeof(Scalar)));
  }
  if (!os) throw ConfigError("checkpoint write failed: " + path);
}

std::vector<Entry> read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw ConfigError("not a KRD1 checkpoint: " + path);
  }
  std::vector<Entry> entries;
  std::uint32_t name_len;
  while (get_u32(is, name_len)) {
    Entry e;
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    std::uint32_t rank;
    if (!get_u32(is, rank)) throw ConfigError("truncated checkpoint: " + path);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint32_t d;
      if (!get_u32(is, d)) throw ConfigError("truncated checkpoint: " + path);
      e.dims.push_back(d);
      count *= d;
    }
    e.values.resize(count);
    is.read(reinterpret_cast<char*>(e.values.data()),
            static_cast<std::streamsize>(count * sizeof(Scalar)));
    if (!is) throw ConfigError("truncated checkpoint: " + path);
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_model(const std::string& path, const ParamStore& store,
                const std::map<std::string, Scalar>& meta) {
  std::vector<Entry> entries;
  for (const auto& [key, v] : meta) {
    entries.push_back(Entry::from_matrix("__meta__." + key, Mat::Constant(1, 1, v)));
  }
  for (const std::string& name : store.names_sorted()) {
    const Parameter& p = store.get(name);
    entries.push_back(Entry::from_matrix(name, p.value));
    entries.push_back(Entry::from_matrix("__opt__." + name + ".g2", p.accum_grad));
    entries.push_back(Entry::from_matrix("__opt__." + name + ".u2", p.accum_update));
  }
  write_file(path, entries);
}

std::map<std::string, Scalar> load_model(const std::string& path, ParamStore& store) {
  std::map<std::string, Scalar> meta;
  std::set<std::string> seen;
  for (const Entry& e : read_file(path)) {
    if (e.name.starts_with("__meta__.")) {
      meta[e.name.substr(9)] = e.values.at(0);
      continue;
    }
    bool opt = e.name.starts_with("__opt__.");
    std::string pname = e.name;
    int which = 0;  // 0 value, 1 g2, 2 u2
    if (opt) {
      pname = e.name.substr(8);
      if (pname.ends_with(".g2")) {
        which = 1;
      } else if (pname.ends_with(".u2")) {
        which = 2;
      } else {
        throw ConfigError("unrecognized optimizer entry: " + e.name);
      }
      pname = pname.substr(0, pname.size() - 3);
    }
    if (!store.contains(pname)) {
      throw ConfigError("checkpoint entry '" + e.name + "' not in model definition");
    }
    Parameter& p = store.get(pname);
    Mat m = e.as_matrix();
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw ConfigError("checkpoint entry '" + e.name + "' shape " + shape_str(m) +
                        " does not match model shape " + shape_str(p.value));
    }
    switch (which) {
      case 0:
        p.value = std::move(m);
        seen.insert(pname);
        break;
      case 1:
        p.accum_grad = std::move(m);
        break;
      case 2:
        p.accum_update = std::move(m);
        break;
    }
  }
  for (const std::string& name : store.names_sorted()) {
    if (!seen.count(name)) {
      throw ConfigError("checkpoint missing parameter '" + name + "'");
    }
  }
  return meta;
}

}  // namespace krd::checkpoint
