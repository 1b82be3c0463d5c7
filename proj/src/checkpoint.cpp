#include "colt/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "colt/error.hpp"

namespace colt {

namespace {

constexpr uint8_t kTagMaskIneligible = 0x40;
constexpr uint8_t kTagMaskEligible = 0x41;
constexpr uint8_t kTagMeta = 0xFF;
constexpr const char* kProvenanceName = "__provenance__";

// ---- byte buffer helpers ----------------------------------------------------

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& b, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(b, bits);
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n, const char* what) const {
    if (pos + n > buf.size()) {
      throw ParseError(std::string("truncated checkpoint while reading ") + what);
    }
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return buf[pos++];
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(buf[pos]) | static_cast<uint16_t>(buf[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64(const char* what) {
    need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32(const char* what) {
    const uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::vector<uint8_t> bytes(size_t n, const char* what) {
    need(n, what);
    std::vector<uint8_t> out(buf.begin() + static_cast<int64_t>(pos),
                             buf.begin() + static_cast<int64_t>(pos + n));
    pos += n;
    return out;
  }
};

// ---- record encoding ---------------------------------------------------------

void put_record_header(std::vector<uint8_t>& b, const std::string& name, uint8_t tag,
                       const std::vector<uint64_t>& dims) {
  if (name.size() > 0xFFFF) throw StateError("record name too long");
  put_u16(b, static_cast<uint16_t>(name.size()));
  b.insert(b.end(), name.begin(), name.end());
  b.push_back(tag);
  b.push_back(static_cast<uint8_t>(dims.size()));
  for (uint64_t d : dims) put_u64(b, d);
}

void put_f32_record(std::vector<uint8_t>& b, const std::string& name, ParamKind kind,
                    const Shape& shape, std::span<const float> values) {
  std::vector<uint64_t> dims(shape.begin(), shape.end());
  put_record_header(b, name, static_cast<uint8_t>(kind), dims);
  for (float v : values) put_f32(b, v);
}

void put_mask_record(std::vector<uint8_t>& b, const MaskEntry& e) {
  put_record_header(b, e.name, e.eligible ? kTagMaskEligible : kTagMaskIneligible,
                    {static_cast<uint64_t>(e.bits)});
  b.insert(b.end(), e.field.bytes().begin(), e.field.bytes().end());
}

void put_meta_record(std::vector<uint8_t>& b, const std::string& name, const std::string& text) {
  put_record_header(b, name, kTagMeta, {static_cast<uint64_t>(text.size())});
  b.insert(b.end(), text.begin(), text.end());
}

struct RawRecord {
  std::string name;
  uint8_t tag = 0;
  std::vector<uint64_t> dims;
  std::vector<float> f32_payload;
  std::vector<uint8_t> byte_payload;  // mask bits or meta text
};

RawRecord read_record(Reader& r) {
  RawRecord rec;
  const uint16_t name_len = r.u16("record name length");
  const auto name_bytes = r.bytes(name_len, "record name");
  rec.name.assign(name_bytes.begin(), name_bytes.end());
  rec.tag = r.u8("record kind tag");
  const uint8_t rank = r.u8("record rank");
  uint64_t numel = 1;
  for (int i = 0; i < rank; ++i) {
    rec.dims.push_back(r.u64("record dims"));
    numel *= rec.dims.back();
  }
  if (rec.tag <= 3) {
    rec.f32_payload.reserve(static_cast<size_t>(numel));
    for (uint64_t i = 0; i < numel; ++i) rec.f32_payload.push_back(r.f32("tensor payload"));
  } else if (rec.tag == kTagMaskEligible || rec.tag == kTagMaskIneligible) {
    if (rank != 1) throw ParseError("mask record '" + rec.name + "' must have rank 1");
    rec.byte_payload = r.bytes(static_cast<size_t>((rec.dims[0] + 7) / 8), "mask payload");
  } else if (rec.tag == kTagMeta) {
    if (rank != 1) throw ParseError("meta record '" + rec.name + "' must have rank 1");
    rec.byte_payload = r.bytes(static_cast<size_t>(rec.dims[0]), "meta payload");
  } else {
    throw ParseError("unknown record kind tag " + std::to_string(rec.tag) + " for '" +
                     rec.name + "'");
  }
  return rec;
}

// ---- container framing -------------------------------------------------------

std::vector<uint8_t> frame(CheckpointKind kind, uint32_t record_count,
                           const std::vector<uint8_t>& records) {
  std::vector<uint8_t> out;
  out.push_back('C');
  out.push_back('O');
  out.push_back('L');
  out.push_back('T');
  put_u16(out, kCheckpointVersion);
  out.push_back(static_cast<uint8_t>(kind));
  put_u32(out, record_count);
  out.insert(out.end(), records.begin(), records.end());
  put_u32(out, crc32_ieee(out.data(), out.size()));
  return out;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to '" + path + "'");
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open checkpoint '" + path + "'");
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(f),
                              std::istreambuf_iterator<char>());
}

struct Parsed {
  CheckpointKind kind;
  std::vector<RawRecord> records;
};

Parsed parse(const std::vector<uint8_t>& buf, CheckpointKind expected) {
  if (buf.size() < 15) throw ParseError("truncated checkpoint: only " +
                                        std::to_string(buf.size()) + " bytes");
  if (std::memcmp(buf.data(), "COLT", 4) != 0) {
    throw ParseError("bad magic: not a checkpoint file");
  }
  const uint32_t stored_crc = static_cast<uint32_t>(buf[buf.size() - 4]) |
                              static_cast<uint32_t>(buf[buf.size() - 3]) << 8 |
                              static_cast<uint32_t>(buf[buf.size() - 2]) << 16 |
                              static_cast<uint32_t>(buf[buf.size() - 1]) << 24;
  const uint32_t actual_crc = crc32_ieee(buf.data(), buf.size() - 4);
  if (stored_crc != actual_crc) throw ParseError("CRC mismatch: checkpoint is corrupt");

  Reader r{buf, 4};
  const uint16_t version = r.u16("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint8_t kind = r.u8("object kind");
  if (kind < 1 || kind > 3) throw ParseError("unknown object kind " + std::to_string(kind));
  if (kind != static_cast<uint8_t>(expected)) {
    throw ParseError("checkpoint holds object kind " + std::to_string(kind) + ", expected " +
                     std::to_string(static_cast<int>(expected)));
  }
  const uint32_t count = r.u32("record count");
  Parsed p;
  p.kind = expected;
  for (uint32_t i = 0; i < count; ++i) p.records.push_back(read_record(r));
  if (r.pos != buf.size() - 4) throw ParseError("trailing bytes after last record");
  return p;
}

// ---- provenance text ----------------------------------------------------------

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string provenance_text(const TicketProvenance& p) {
  std::ostringstream os;
  os << "method=" << p.method << "\n";
  os << "source_dataset=" << p.source_dataset << "\n";
  os << "rounds=" << p.rounds << "\n";
  os << "p=" << fmt_double(p.schedule.prune_fraction) << "\n";
  os << "eligibility=" << eligibility_rule_name(p.schedule.eligibility) << "\n";
  os << "target_sparsity=" << fmt_double(p.schedule.target_sparsity) << "\n";
  os << "max_rounds=" << p.schedule.max_rounds << "\n";
  os << "seed_init=" << p.seeds.init << "\n";
  os << "seed_data=" << p.seeds.data << "\n";
  os << "seed_head=" << p.seeds.head << "\n";
  os << "arch=" << arch_name(p.model.arch) << "\n";
  os << "hidden=" << join_ints(p.model.hidden) << "\n";
  os << "channels=" << join_ints(p.model.channels) << "\n";
  os << "num_classes=" << p.model.num_classes << "\n";
  os << "in_channels=" << p.model.in_channels << "\n";
  os << "in_height=" << p.model.in_height << "\n";
  os << "in_width=" << p.model.in_width << "\n";
  os << "norm=" << (p.model.norm == NormMode::none ? "none" : "per-batch") << "\n";
  os << "val_fraction=" << fmt_double(p.val_fraction) << "\n";
  os << "sparsity_all=" << fmt_double(p.sparsity_all) << "\n";
  os << "sparsity_eligible=" << fmt_double(p.sparsity_eligible) << "\n";
  return os.str();
}

TicketProvenance parse_provenance(const std::string& text) {
  TicketProvenance p;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("malformed provenance line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "method") p.method = value;
      else if (key == "source_dataset") p.source_dataset = value;
      else if (key == "rounds") p.rounds = std::stoi(value);
      else if (key == "p") p.schedule.prune_fraction = std::stod(value);
      else if (key == "eligibility")
        p.schedule.eligibility = value == "all-weights" ? EligibilityRule::all_weights
                                                        : EligibilityRule::conv_only;
      else if (key == "target_sparsity") p.schedule.target_sparsity = std::stod(value);
      else if (key == "max_rounds") p.schedule.max_rounds = std::stoi(value);
      else if (key == "seed_init") p.seeds.init = std::stoull(value);
      else if (key == "seed_data") p.seeds.data = std::stoull(value);
      else if (key == "seed_head") p.seeds.head = std::stoull(value);
      else if (key == "arch") p.model.arch = arch_from_name(value);
      else if (key == "hidden") p.model.hidden = split_ints(value);
      else if (key == "channels") p.model.channels = split_ints(value);
      else if (key == "num_classes") p.model.num_classes = std::stoi(value);
      else if (key == "in_channels") p.model.in_channels = std::stoi(value);
      else if (key == "in_height") p.model.in_height = std::stoi(value);
      else if (key == "in_width") p.model.in_width = std::stoi(value);
      else if (key == "norm")
        p.model.norm = value == "per-batch" ? NormMode::per_batch : NormMode::none;
      else if (key == "val_fraction") p.val_fraction = std::stod(value);
      else if (key == "sparsity_all") p.sparsity_all = std::stod(value);
      else if (key == "sparsity_eligible") p.sparsity_eligible = std::stod(value);
      else throw ParseError("unknown provenance key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed provenance value for '" + key + "'");
    }
  }
  return p;
}

}  // namespace

uint32_t crc32_ieee(const uint8_t* data, size_t len) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

std::vector<uint8_t> encode_ticket_checkpoint(const Ticket& t) {
  std::vector<uint8_t> records;
  put_meta_record(records, kProvenanceName, provenance_text(t.prov));
  for (size_t i = 0; i < t.theta0.size(); ++i) {
    const auto& st = t.theta0[i];
    put_f32_record(records, st.name, st.kind, st.shape, st.values);
    put_mask_record(records, t.mask.entries()[i]);
  }
  return frame(CheckpointKind::ticket,
               static_cast<uint32_t>(1 + 2 * t.theta0.size()), records);
}

void save_ticket_checkpoint(const Ticket& t, const std::string& path) {
  t.validate();
  write_file(path, encode_ticket_checkpoint(t));
}

Ticket load_ticket_checkpoint(const std::string& path) {
  const auto parsed = parse(read_file(path), CheckpointKind::ticket);
  Ticket t;
  bool have_prov = false;
  size_t i = 0;
  while (i < parsed.records.size()) {
    const auto& rec = parsed.records[i];
    if (rec.tag == kTagMeta && rec.name == kProvenanceName) {
      t.prov = parse_provenance(std::string(rec.byte_payload.begin(), rec.byte_payload.end()));
      have_prov = true;
      ++i;
      continue;
    }
    if (rec.tag > 3) throw ParseError("expected tensor record, got tag for '" + rec.name + "'");
    if (i + 1 >= parsed.records.size()) {
      throw ParseError("tensor '" + rec.name + "' has no mask record");
    }
    const auto& mrec = parsed.records[i + 1];
    if ((mrec.tag != kTagMaskEligible && mrec.tag != kTagMaskIneligible) ||
        mrec.name != rec.name) {
      throw ParseError("tensor '" + rec.name + "' is not followed by its mask record");
    }
    SnapshotTensor st;
    st.name = rec.name;
    st.kind = static_cast<ParamKind>(rec.tag);
    st.shape.assign(rec.dims.begin(), rec.dims.end());
    st.values = rec.f32_payload;
    t.theta0.push_back(std::move(st));

    MaskEntry e;
    e.name = mrec.name;
    e.bits = static_cast<int64_t>(mrec.dims[0]);
    e.eligible = mrec.tag == kTagMaskEligible;
    e.field = BitField::from_bytes(e.bits, mrec.byte_payload);
    t.mask.add_entry(std::move(e));
    i += 2;
  }
  if (!have_prov) throw ParseError("ticket checkpoint lacks a provenance record");
  t.validate();
  return t;
}

void save_params_checkpoint(const ParameterSet& ps, const std::string& path) {
  std::vector<uint8_t> records;
  for (const auto& it : ps.items()) {
    put_f32_record(records, it.name, it.kind, it.value.shape(), it.value.data());
  }
  write_file(path, frame(CheckpointKind::params,
                         static_cast<uint32_t>(ps.items().size()), records));
}

ParameterSet load_params_checkpoint(const std::string& path) {
  const auto parsed = parse(read_file(path), CheckpointKind::params);
  ParameterSet ps;
  for (const auto& rec : parsed.records) {
    if (rec.tag > 3) throw ParseError("params checkpoint has non-tensor record '" + rec.name + "'");
    Shape shape(rec.dims.begin(), rec.dims.end());
    ps.add(rec.name, static_cast<ParamKind>(rec.tag),
           Tensor::from_vector(std::move(shape), rec.f32_payload));
  }
  return ps;
}

void save_mask_checkpoint(const Mask& m, const std::string& path) {
  std::vector<uint8_t> records;
  for (const auto& e : m.entries()) put_mask_record(records, e);
  write_file(path, frame(CheckpointKind::mask,
                         static_cast<uint32_t>(m.entries().size()), records));
}

Mask load_mask_checkpoint(const std::string& path) {
  const auto parsed = parse(read_file(path), CheckpointKind::mask);
  Mask m;
  for (const auto& rec : parsed.records) {
    if (rec.tag != kTagMaskEligible && rec.tag != kTagMaskIneligible) {
      throw ParseError("mask checkpoint has non-mask record '" + rec.name + "'");
    }
    MaskEntry e;
    e.name = rec.name;
    e.bits = static_cast<int64_t>(rec.dims[0]);
    e.eligible = rec.tag == kTagMaskEligible;
    e.field = BitField::from_bytes(e.bits, rec.byte_payload);
    m.add_entry(std::move(e));
  }
  return m;
}

}  // namespace colt
