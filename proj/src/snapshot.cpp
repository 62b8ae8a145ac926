#include "kgalign/snapshot.hpp"

#include <cstring>
#include <fstream>
#include <type_traits>

#include "kgalign/error.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

namespace {

constexpr char kMagic[8] = {'K', 'G', 'S', 'N', 'A', 'P', '\0', '\0'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  template <typename T>
  T pod() {
    T v{};
    need(sizeof v);
    std::memcpy(&v, data_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }
  bool has(std::size_t n) const { return data_.size() - pos_ >= n; }

 private:
  void need(std::size_t n) const {
    if (!has(n)) throw Error(ErrorKind::ParseError, "truncated snapshot");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<FileStamp> stamp_files(const GraphFiles& files) {
  std::vector<FileStamp> out;
  for (const auto* p : {&files.entities, &files.relations, &files.rel_triples, &files.att_triples}) {
    if (p->empty() || !std::filesystem::exists(*p)) continue;
    const auto mtime = std::filesystem::last_write_time(*p).time_since_epoch();
    out.push_back(FileStamp{
        p->string(), static_cast<std::uint64_t>(std::filesystem::file_size(*p)),
        static_cast<std::int64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(mtime).count())});
  }
  return out;
}

void write_snapshot(const std::filesystem::path& path, const LoadedGraph& loaded,
                    const std::vector<FileStamp>& stamps) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write snapshot " + path.string());
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.pod(kSnapshotVersion);

  w.pod<std::uint32_t>(static_cast<std::uint32_t>(stamps.size()));
  for (const auto& s : stamps) {
    w.str(s.path);
    w.pod(s.size);
    w.pod(s.mtime);
  }
  const KnowledgeGraph& g = loaded.graph;
  w.pod<std::uint64_t>(g.entities().size());
  for (const auto& [id, ref] : g.entities()) {
    w.pod(id);
    w.str(ref.uri);
  }
  for (const UriMap* m : {&g.relations(), &g.attributes()}) {
    w.pod<std::uint64_t>(m->size());
    for (const auto& [id, uri] : *m) {
      w.pod(id);
      w.str(uri);
    }
  }
  w.pod<std::uint64_t>(g.rel_triples().size());
  for (const auto& t : g.rel_triples()) {
    w.pod(t.head);
    w.pod(t.relation);
    w.pod(t.tail);
  }
  w.pod<std::uint64_t>(g.att_triples().size());
  for (const auto& t : g.att_triples()) {
    w.pod(t.head);
    w.pod(t.attribute);
    w.str(t.value);
  }
  w.pod<std::uint64_t>(loaded.skipped_attribute_lines);
  if (!out) throw Error(ErrorKind::IoError, "short write to snapshot " + path.string());
}

std::optional<LoadedGraph> read_snapshot(const std::filesystem::path& path,
                                         const std::vector<FileStamp>& expected) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  Reader r(read_file(path));
  if (!r.has(sizeof kMagic)) return std::nullopt;
  char magic[sizeof kMagic];
  for (char& c : magic) c = r.pod<char>();
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) return std::nullopt;
  if (r.pod<std::uint32_t>() != kSnapshotVersion) return std::nullopt;

  std::vector<FileStamp> stamps(r.pod<std::uint32_t>());
  for (auto& s : stamps) {
    s.path = r.str();
    s.size = r.pod<std::uint64_t>();
    s.mtime = r.pod<std::int64_t>();
  }
  if (stamps != expected) return std::nullopt;

  EntityMap entities;
  for (auto n = r.pod<std::uint64_t>(); n > 0; --n) {
    const auto id = r.pod<EntityId>();
    std::string uri = r.str();
    std::string label = text::label_from_uri(uri);
    entities.emplace(id, EntityRef{id, std::move(uri), std::move(label)});
  }
  UriMap maps[2];
  for (auto& m : maps) {
    for (auto n = r.pod<std::uint64_t>(); n > 0; --n) {
      const auto id = r.pod<std::uint32_t>();
      m.emplace(id, r.str());
    }
  }
  std::vector<RelationalTriple> rel(r.pod<std::uint64_t>());
  for (auto& t : rel) {
    t.head = r.pod<EntityId>();
    t.relation = r.pod<RelationId>();
    t.tail = r.pod<EntityId>();
  }
  std::vector<AttributeTriple> att(r.pod<std::uint64_t>());
  for (auto& t : att) {
    t.head = r.pod<EntityId>();
    t.attribute = r.pod<AttributeId>();
    t.value = r.str();
  }
  LoadedGraph out;
  out.skipped_attribute_lines = r.pod<std::uint64_t>();
  if (!r.at_end()) throw Error(ErrorKind::ParseError, "trailing bytes in snapshot");
  out.graph = build_graph(std::move(entities), std::move(maps[0]), std::move(maps[1]),
                          std::move(rel), std::move(att));
  return out;
}

}  // namespace kgalign
