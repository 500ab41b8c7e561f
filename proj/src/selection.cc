#include "octomidi/selection.h"

#include <algorithm>
#include <limits>

#include "octomidi/error.h"

namespace octomidi {
namespace {

constexpr size_t kAbsent = std::numeric_limits<size_t>::max();

// Set of indices with O(1) removal and uniform draws. Draw order depends only
// on the sequence of operations, which keeps selection reproducible.
class IndexPool {
 public:
  IndexPool(size_t universe, const std::vector<size_t>& items) : where_(universe, kAbsent) {
    items_.reserve(items.size());
    for (size_t i : items) {
      where_[i] = items_.size();
      items_.push_back(i);
    }
  }

  bool empty() const { return items_.empty(); }
  bool contains(size_t i) const { return where_[i] != kAbsent; }

  void remove(size_t i) {
    const size_t at = where_[i];
    if (at == kAbsent) return;
    const size_t last = items_.back();
    items_[at] = last;
    where_[last] = at;
    items_.pop_back();
    where_[i] = kAbsent;
  }

  size_t draw(Rng& rng) const { return items_[static_cast<size_t>(rng.uniform(items_.size()))]; }

 private:
  std::vector<size_t> where_;
  std::vector<size_t> items_;
};

std::vector<size_t> musical_indices(const TokenSequence& seq) {
  std::vector<size_t> out;
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    if (seq.tokens[i].is_musical()) out.push_back(i);
  }
  return out;
}

void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "selection ratio must lie in (0, 1)");
  }
}

// Coverage stopping rule shared by every method.
bool reached(const SelectionMask& mask, size_t musical_cells, double ratio) {
  return static_cast<double>(mask.selected_cells()) >=
         ratio * static_cast<double>(musical_cells) - 1e-9;
}

// Shuffle-and-take for methods whose objects are known up front.
template <class Apply>
void take_until(std::vector<Span> units, Rng& rng, SelectionMask& mask, size_t musical_cells,
                double ratio, Apply apply) {
  rng.shuffle(units);
  for (const auto& u : units) {
    if (reached(mask, musical_cells, ratio)) break;
    apply(u);
  }
}

// Marks tokens p.. for up to n tokens in column `field` (or whole rows when
// field < 0), stopping at the first non-musical or already selected target.
Span mark_run(const TokenSequence& seq, SelectionMask& mask, size_t p, size_t n, int field) {
  size_t len = 0;
  for (size_t i = p; i < seq.tokens.size() && len < n; ++i, ++len) {
    if (!seq.tokens[i].is_musical()) break;
    if (field < 0) {
      if (mask.row_any(i)) break;
      mask.set_row(i);
    } else {
      const auto f = static_cast<Field>(field);
      if (mask.get(i, f)) break;
      mask.set(i, f);
    }
  }
  Span span{p, len, field};
  mask.add_span(span);
  return span;
}

SelectionMask select_octuple(const TokenSequence& seq, Granularity granularity, double ratio,
                             Rng& rng, const std::vector<size_t>& musical) {
  const SelectionMethod method{Level::kOctuple, granularity};
  SelectionMask mask(seq.size(), method, musical.size());
  const size_t cells = musical.size() * kNumFields;
  std::vector<size_t> units;
  if (granularity == Granularity::kToken) {
    units = musical;
  } else {
    for (size_t i : musical) {
      for (int f = 0; f < kNumFields; ++f) units.push_back(i * kNumFields + static_cast<size_t>(f));
    }
  }
  // Partial Fisher-Yates: draw without replacement until coverage is met.
  for (size_t k = 0; k < units.size() && !reached(mask, cells, ratio); ++k) {
    const size_t j = k + static_cast<size_t>(rng.uniform(units.size() - k));
    std::swap(units[k], units[j]);
    if (granularity == Granularity::kToken) {
      mask.set_row(units[k]);
      mask.add_span({units[k], 1, -1});
    } else {
      const size_t row = units[k] / kNumFields;
      const int field = static_cast<int>(units[k] % kNumFields);
      mask.set(row, static_cast<Field>(field));
      mask.add_span({row, 1, field});
    }
  }
  return mask;
}

SelectionMask select_bar(const TokenSequence& seq, Granularity granularity, double ratio, Rng& rng,
                         const std::vector<size_t>& musical) {
  const SelectionMethod method{Level::kBar, granularity};
  SelectionMask mask(seq.size(), method, musical.size());
  const size_t cells = musical.size() * kNumFields;
  const auto runs = bar_runs(seq);
  std::vector<Span> units;
  for (const auto& r : runs) {
    if (granularity == Granularity::kToken) {
      units.push_back(r);
    } else {
      for (int f = 0; f < kNumFields; ++f) units.push_back({r.start, r.length, f});
    }
  }
  take_until(std::move(units), rng, mask, cells, ratio,
             [&](const Span& u) { mark_run(seq, mask, u.start, u.length, u.field); });
  return mask;
}

SelectionMask select_nbar(const TokenSequence& seq, Granularity granularity, double ratio, Rng& rng,
                          const std::vector<size_t>& musical) {
  const SelectionMethod method{Level::kNBar, granularity};
  SelectionMask mask(seq.size(), method, musical.size());
  const size_t cells = musical.size() * kNumFields;
  const size_t columns = granularity == Granularity::kToken ? 1 : kNumFields;
  std::vector<IndexPool> pools(columns, IndexPool(seq.size(), musical));

  while (!reached(mask, cells, ratio)) {
    size_t column = 0;
    if (granularity == Granularity::kElement) {
      std::vector<size_t> open;
      for (size_t f = 0; f < columns; ++f) {
        if (!pools[f].empty()) open.push_back(f);
      }
      if (open.empty()) break;
      column = open[static_cast<size_t>(rng.uniform(open.size()))];
    } else if (pools[0].empty()) {
      break;
    }
    const size_t p = pools[column].draw(rng);
    const int m = static_cast<int>(rng.uniform_int(kMinSpanUnits, kMaxSpanUnits));
    const size_t n = nbar_span(seq, p, m).n;
    const int field = granularity == Granularity::kToken ? -1 : static_cast<int>(column);
    const Span span = mark_run(seq, mask, p, n, field);
    for (size_t i = span.start; i < span.start + span.length; ++i) pools[column].remove(i);
  }
  return mask;
}

}  // namespace

std::string method_name(SelectionMethod method) {
  std::string out;
  switch (method.level) {
    case Level::kOctuple: out = "Octuple"; break;
    case Level::kBar: out = "Bar"; break;
    case Level::kNBar: out = "NBar"; break;
  }
  out += method.granularity == Granularity::kElement ? "-Element" : "-Token";
  return out;
}

SelectionMethod parse_method(std::string_view name) {
  for (const auto& m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw Error(ErrorCode::kFormatError, "unknown selection method '" + std::string(name) + "'");
}

SelectionMask::SelectionMask(size_t length, SelectionMethod method, size_t musical_tokens)
    : rows_(length, 0), method_(method), musical_cells_(musical_tokens * kNumFields) {}

void SelectionMask::set(size_t row, Field field) {
  const uint8_t bit = static_cast<uint8_t>(1u << static_cast<int>(field));
  if (!(rows_[row] & bit)) {
    rows_[row] |= bit;
    ++selected_;
  }
}

void SelectionMask::set_row(size_t row) {
  for (Field f : kAllFields) set(row, f);
}

size_t SelectionMask::full_rows() const {
  return static_cast<size_t>(std::count(rows_.begin(), rows_.end(), uint8_t{0xFF}));
}

double SelectionMask::coverage() const {
  return musical_cells_ == 0 ? 0.0
                             : static_cast<double>(selected_) / static_cast<double>(musical_cells_);
}

std::string SelectionMask::to_text() const {
  std::string out;
  out.reserve(rows_.size() * (kNumFields + 1));
  for (uint8_t bits : rows_) {
    for (int f = 0; f < kNumFields; ++f) out += ((bits >> f) & 1) ? '1' : '0';
    out += '\n';
  }
  return out;
}

SpanDraw nbar_span(const TokenSequence& seq, size_t p, int m) {
  if (m < kMinSpanUnits || m > kMaxSpanUnits) {
    throw Error(ErrorCode::kBadM, "m=" + std::to_string(m) + " outside [1, 128]");
  }
  if (p >= seq.size() || !seq.tokens[p].is_musical()) {
    throw Error(ErrorCode::kBadIndex, "p=" + std::to_string(p) + " is not a musical token");
  }
  // Sum over i = p .. p+n-1, so n is the number of selected tokens.
  int64_t total = 0;
  size_t n = 0;
  for (size_t i = p; i < seq.size() && seq.tokens[i].is_musical(); ++i) {
    total += token_duration(seq.tokens[i]);
    ++n;
    if (total >= m) break;
  }
  return {p, m, n};
}

SelectionMask select(const TokenSequence& seq, SelectionMethod method, double ratio, Rng& rng) {
  check_ratio(ratio);
  const auto musical = musical_indices(seq);
  if (musical.empty()) throw Error(ErrorCode::kEmptySequence, "no musical tokens to select");
  switch (method.level) {
    case Level::kOctuple: return select_octuple(seq, method.granularity, ratio, rng, musical);
    case Level::kBar: return select_bar(seq, method.granularity, ratio, rng, musical);
    case Level::kNBar: return select_nbar(seq, method.granularity, ratio, rng, musical);
  }
  return {};
}

SelectionMask select_nbar_forced(const TokenSequence& seq, Granularity granularity,
                                 std::span<const ForcedDraw> draws) {
  const auto musical = musical_indices(seq);
  SelectionMask mask(seq.size(), {Level::kNBar, granularity}, musical.size());
  for (const auto& d : draws) {
    const size_t n = nbar_span(seq, d.p, d.m).n;
    mark_run(seq, mask, d.p, n,
             granularity == Granularity::kToken ? -1 : static_cast<int>(d.field));
  }
  return mask;
}

SelectionMask select_poisson_spans(const TokenSequence& seq, double ratio, double mean_length,
                                   Rng& rng) {
  check_ratio(ratio);
  const auto musical = musical_indices(seq);
  if (musical.empty()) throw Error(ErrorCode::kEmptySequence, "no musical tokens to select");
  SelectionMask mask(seq.size(), kOctupleToken, musical.size());
  const size_t cells = musical.size() * kNumFields;
  IndexPool pool(seq.size(), musical);
  while (!pool.empty() && !reached(mask, cells, ratio)) {
    const size_t p = pool.draw(rng);
    size_t free_run = 0;
    while (p + free_run < seq.size() && pool.contains(p + free_run)) ++free_run;
    const size_t k = std::clamp<size_t>(static_cast<size_t>(rng.poisson(mean_length)), 1, free_run);
    const Span span = mark_run(seq, mask, p, k, -1);
    for (size_t i = span.start; i < span.start + span.length; ++i) pool.remove(i);
  }
  return mask;
}

std::vector<Span> bar_runs(const TokenSequence& seq) {
  std::vector<Span> runs;
  for (size_t i = 0; i < seq.size(); ++i) {
    const auto& t = seq.tokens[i];
    if (!t.is_musical()) continue;
    if (!runs.empty()) {
      Span& last = runs.back();
      if (last.start + last.length == i &&
          seq.tokens[last.start][Field::kBar] == t[Field::kBar]) {
        ++last.length;
        continue;
      }
    }
    runs.push_back({i, 1, -1});
  }
  return runs;
}

}  // namespace octomidi
