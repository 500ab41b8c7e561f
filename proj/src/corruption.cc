#include "octomidi/corruption.h"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "octomidi/error.h"
#include "octomidi/token_io.h"

namespace octomidi {
namespace {

constexpr std::array<SelectionMethod, 4> kMaskingMethods = {kOctupleElement, kOctupleToken,
                                                           kNBarElement, kNBarToken};
constexpr std::array<SelectionMethod, 2> kDeletionMethods = {kOctupleToken, kNBarToken};
constexpr std::array<SelectionMethod, 2> kInfillingMethods = {kOctupleToken, kNBarToken};
constexpr std::array<SelectionMethod, 2> kPermutationMethods = {kOctupleToken, kBarToken};
constexpr std::array<SelectionMethod, 1> kRotationMethods = {kOctupleToken};

void require_allowed(CorruptionKind kind, SelectionMethod method) {
  if (!is_allowed(kind, method)) {
    throw Error(ErrorCode::kMethodNotAllowed,
                method_name(method) + " is not allowed for " + std::string(kind_name(kind)));
  }
}

CorruptionPair make_pair(const TokenSequence& seq, CorruptionKind kind, SelectionMethod method) {
  CorruptionPair pair;
  pair.target = seq;
  pair.source.provenance = seq.provenance;
  pair.kind = kind;
  pair.method = method;
  return pair;
}

std::vector<size_t> musical_positions(const TokenSequence& seq) {
  std::vector<size_t> out;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (seq.tokens[i].is_musical()) out.push_back(i);
  }
  return out;
}

// Writes the reordered musical tokens back into the musical slots; special
// tokens stay where they were.
TokenSequence reassemble(const TokenSequence& seq, const std::vector<size_t>& slots,
                         std::vector<OctupleToken> musical, const CorruptionOptions& options) {
  if (options.renumber_bars) renumber_bars(musical);
  TokenSequence out = seq;
  for (size_t i = 0; i < slots.size(); ++i) out.tokens[slots[i]] = musical[i];
  return out;
}

}  // namespace

std::string_view kind_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kTokenMasking: return "TokenMasking";
    case CorruptionKind::kTokenDeletion: return "TokenDeletion";
    case CorruptionKind::kTextInfilling: return "TextInfilling";
    case CorruptionKind::kSentencePermutation: return "SentencePermutation";
    case CorruptionKind::kDocumentRotation: return "DocumentRotation";
  }
  return "?";
}

CorruptionKind parse_kind(std::string_view name) {
  for (CorruptionKind k : kAllKinds) {
    if (kind_name(k) == name) return k;
  }
  throw Error(ErrorCode::kFormatError, "unknown corruption kind '" + std::string(name) + "'");
}

std::span<const SelectionMethod> allowed_methods(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kTokenMasking: return kMaskingMethods;
    case CorruptionKind::kTokenDeletion: return kDeletionMethods;
    case CorruptionKind::kTextInfilling: return kInfillingMethods;
    case CorruptionKind::kSentencePermutation: return kPermutationMethods;
    case CorruptionKind::kDocumentRotation: return kRotationMethods;
  }
  return {};
}

bool is_allowed(CorruptionKind kind, SelectionMethod method) {
  const auto methods = allowed_methods(kind);
  return std::find(methods.begin(), methods.end(), method) != methods.end();
}

CorruptionPair mask_tokens(const TokenSequence& seq, SelectionMethod method, double ratio, Rng& rng) {
  require_allowed(CorruptionKind::kTokenMasking, method);
  return apply_masking(seq, select(seq, method, ratio, rng));
}

CorruptionPair apply_masking(const TokenSequence& seq, SelectionMask mask) {
  CorruptionPair pair = make_pair(seq, CorruptionKind::kTokenMasking, mask.method());
  pair.source.tokens = seq.tokens;
  for (size_t i = 0; i < seq.size(); ++i) {
    for (Field f : kAllFields) {
      if (mask.get(i, f)) pair.source.tokens[i][f] = kMaskId;
    }
  }
  pair.mask = std::move(mask);
  return pair;
}

CorruptionPair delete_tokens(const TokenSequence& seq, SelectionMethod method, double prob, Rng& rng) {
  require_allowed(CorruptionKind::kTokenDeletion, method);
  return apply_deletion(seq, select(seq, method, prob, rng));
}

CorruptionPair apply_deletion(const TokenSequence& seq, SelectionMask mask) {
  require_allowed(CorruptionKind::kTokenDeletion, mask.method());
  CorruptionPair pair = make_pair(seq, CorruptionKind::kTokenDeletion, mask.method());
  for (size_t i = 0; i < seq.size(); ++i) {
    if (!mask.row_full(i)) pair.source.tokens.push_back(seq.tokens[i]);
  }
  pair.mask = std::move(mask);
  return pair;
}

CorruptionPair infill_spans(const TokenSequence& seq, SelectionMethod method, double ratio, Rng& rng,
                            const CorruptionOptions& options) {
  require_allowed(CorruptionKind::kTextInfilling, method);
  if (method == kOctupleToken) {
    return apply_infilling(seq, select_poisson_spans(seq, ratio, options.infill_mean_span, rng));
  }
  return apply_infilling(seq, select(seq, method, ratio, rng));
}

CorruptionPair apply_infilling(const TokenSequence& seq, SelectionMask mask) {
  require_allowed(CorruptionKind::kTextInfilling, mask.method());
  CorruptionPair pair = make_pair(seq, CorruptionKind::kTextInfilling, mask.method());
  std::vector<Span> spans;
  for (const auto& s : mask.spans()) {
    if (s.length > 0) spans.push_back(s);
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  size_t next = 0;
  for (size_t i = 0; i < seq.size();) {
    if (next < spans.size() && spans[next].start == i) {
      pair.source.tokens.push_back(OctupleToken::filled(kMaskId));
      i += spans[next].length;
      ++next;
    } else {
      pair.source.tokens.push_back(seq.tokens[i]);
      ++i;
    }
  }
  pair.mask = std::move(mask);
  return pair;
}

CorruptionPair permute_sentences(const TokenSequence& seq, SelectionMethod method, Rng& rng,
                                 const CorruptionOptions& options) {
  require_allowed(CorruptionKind::kSentencePermutation, method);
  CorruptionPair pair = make_pair(seq, CorruptionKind::kSentencePermutation, method);
  const auto slots = musical_positions(seq);
  TokenSequence compact;
  for (size_t i : slots) compact.tokens.push_back(seq.tokens[i]);
  const size_t n = compact.size();

  std::vector<Span> segments = bar_runs(compact);
  if (method == kOctupleToken && n > 0) {
    size_t k = options.permutation_segments > 0 ? options.permutation_segments : segments.size();
    k = std::clamp<size_t>(k, 1, n);
    std::vector<size_t> cuts(n - 1);
    for (size_t i = 0; i < cuts.size(); ++i) cuts[i] = i + 1;
    for (size_t i = 0; i + 1 < k; ++i) {
      const size_t j = i + static_cast<size_t>(rng.uniform(cuts.size() - i));
      std::swap(cuts[i], cuts[j]);
    }
    cuts.resize(k - 1);
    std::sort(cuts.begin(), cuts.end());
    segments.clear();
    size_t start = 0;
    for (size_t c : cuts) {
      segments.push_back({start, c - start, -1});
      start = c;
    }
    segments.push_back({start, n - start, -1});
  }
  rng.shuffle(segments);

  std::vector<OctupleToken> shuffled;
  shuffled.reserve(n);
  for (const auto& s : segments) {
    shuffled.insert(shuffled.end(), compact.tokens.begin() + static_cast<std::ptrdiff_t>(s.start),
                    compact.tokens.begin() + static_cast<std::ptrdiff_t>(s.start + s.length));
  }
  pair.source = reassemble(seq, slots, std::move(shuffled), options);
  pair.segments = std::move(segments);
  return pair;
}

CorruptionPair rotate_document(const TokenSequence& seq, Rng& rng, const CorruptionOptions& options) {
  const size_t n = musical_positions(seq).size();
  if (n == 0) throw Error(ErrorCode::kEmptySequence, "nothing to rotate");
  return rotate_by(seq, static_cast<size_t>(rng.uniform(n)), options);
}

CorruptionPair rotate_by(const TokenSequence& seq, size_t k, const CorruptionOptions& options) {
  const auto slots = musical_positions(seq);
  if (slots.empty()) throw Error(ErrorCode::kEmptySequence, "nothing to rotate");
  if (k >= slots.size()) throw Error(ErrorCode::kBadIndex, "rotation offset past the sequence");
  CorruptionPair pair = make_pair(seq, CorruptionKind::kDocumentRotation, kOctupleToken);
  std::vector<OctupleToken> rotated;
  rotated.reserve(slots.size());
  for (size_t i = 0; i < slots.size(); ++i) {
    rotated.push_back(seq.tokens[slots[(k + i) % slots.size()]]);
  }
  pair.source = reassemble(seq, slots, std::move(rotated), options);
  pair.rotation = k;
  return pair;
}

void renumber_bars(std::vector<OctupleToken>& tokens) {
  int32_t bar = -1;
  int32_t previous = -1;
  for (auto& t : tokens) {
    if (!t.is_musical()) continue;
    if (bar < 0) {
      bar = 0;
    } else if (t[Field::kBar] != previous) {
      bar = std::min(bar + 1, kMaxBar);
    }
    previous = t[Field::kBar];
    t[Field::kBar] = kFirstValueId + bar;
  }
}

void CorruptionConfig::enable_only(std::span<const CorruptionKind> kinds) {
  kind_weights.fill(0.0);
  for (CorruptionKind k : kinds) kind_weights[static_cast<size_t>(k)] = 1.0;
}

void CorruptionConfig::validate() const {
  bool any = false;
  for (double w : kind_weights) {
    if (w < 0.0) throw Error(ErrorCode::kInvalidConfig, "negative kind weight");
    any = any || w > 0.0;
  }
  if (!any) throw Error(ErrorCode::kInvalidConfig, "no corruption kind enabled");
  for (double r : {masking_ratio, deletion_ratio, infilling_ratio}) {
    if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::kInvalidConfig, "ratios must lie in (0, 1)");
  }
  if (!(options.infill_mean_span > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "infill mean span must be positive");
  }
  for (CorruptionKind k : kAllKinds) {
    for (SelectionMethod m : methods[static_cast<size_t>(k)]) require_allowed(k, m);
  }
}

CorruptionPair corrupt(const TokenSequence& seq, uint64_t seed, const CorruptionConfig& config) {
  Rng rng(seed);
  std::vector<double> weights(config.kind_weights.begin(), config.kind_weights.end());
  const auto kind = static_cast<CorruptionKind>(rng.weighted(weights));
  const auto& configured = config.methods[static_cast<size_t>(kind)];
  const auto allowed = allowed_methods(kind);
  const SelectionMethod method =
      configured.empty() ? allowed[static_cast<size_t>(rng.uniform(allowed.size()))]
                         : configured[static_cast<size_t>(rng.uniform(configured.size()))];

  CorruptionPair pair;
  switch (kind) {
    case CorruptionKind::kTokenMasking:
      pair = mask_tokens(seq, method, config.masking_ratio, rng);
      break;
    case CorruptionKind::kTokenDeletion:
      pair = delete_tokens(seq, method, config.deletion_ratio, rng);
      break;
    case CorruptionKind::kTextInfilling:
      pair = infill_spans(seq, method, config.infilling_ratio, rng, config.options);
      break;
    case CorruptionKind::kSentencePermutation:
      pair = permute_sentences(seq, method, rng, config.options);
      break;
    case CorruptionKind::kDocumentRotation:
      pair = rotate_document(seq, rng, config.options);
      break;
  }
  pair.seed = seed;
  return pair;
}

PairRecord to_record(const CorruptionPair& pair) {
  return {pair.kind, pair.method, pair.seed, pair.source.tokens, pair.target.tokens};
}

void write_record(std::ostream& out, const PairRecord& r) {
  out << "@pair kind=" << kind_name(r.kind) << " method=" << method_name(r.method)
      << " seed=" << r.seed << " src_len=" << r.source.size() << " tgt_len=" << r.target.size()
      << '\n';
  for (const auto& t : r.source) out << format_token(t) << '\n';
  for (const auto& t : r.target) out << format_token(t) << '\n';
  out << '\n';
}

void write_pair(std::ostream& out, const CorruptionPair& pair) { write_record(out, to_record(pair)); }

std::vector<PairRecord> read_pairs(std::istream& in) {
  std::vector<PairRecord> records;
  std::string line;
  size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  auto field = [&](std::istringstream& ss, std::string_view key) {
    std::string item;
    if (!(ss >> item) || item.compare(0, key.size() + 1, std::string(key) + "=") != 0) {
      fail("expected " + std::string(key) + "=");
    }
    return item.substr(key.size() + 1);
  };
  auto to_u64 = [&](const std::string& s) {
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  };

  while (next_line()) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "@pair") fail("expected '@pair' header");
    PairRecord r;
    try {
      r.kind = parse_kind(field(ss, "kind"));
      r.method = parse_method(field(ss, "method"));
    } catch (const Error& e) {
      fail(e.what());
    }
    r.seed = to_u64(field(ss, "seed"));
    const uint64_t src_len = to_u64(field(ss, "src_len"));
    const uint64_t tgt_len = to_u64(field(ss, "tgt_len"));
    std::string extra;
    if (ss >> extra) fail("trailing header field '" + extra + "'");
    for (uint64_t i = 0; i < src_len + tgt_len; ++i) {
      if (!next_line()) fail("record ends before its declared token count");
      try {
        (i < src_len ? r.source : r.target).push_back(parse_token_line(line));
      } catch (const Error& e) {
        fail(e.what());
      }
    }
    if (next_line() && !line.empty()) fail("record not followed by a blank line");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace octomidi
