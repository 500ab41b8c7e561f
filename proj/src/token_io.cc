#include "octomidi/token_io.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "octomidi/error.h"

namespace octomidi {
namespace {

[[noreturn]] void format_error(size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": " + what);
}

int64_t parse_int(std::string_view text, size_t line_no) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    format_error(line_no, "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

Provenance parse_header(const std::string& line, size_t line_no) {
  // "# source=<name> segment=<k>[ pad=<n>]"; the name may contain spaces.
  Provenance p;
  const auto src = line.find("source=");
  const auto seg = line.rfind(" segment=");
  if (src == std::string::npos || seg == std::string::npos || seg < src) {
    format_error(line_no, "header needs source= and segment=");
  }
  p.source = line.substr(src + 7, seg - (src + 7));
  std::string rest = line.substr(seg + 9);
  const auto pad = rest.find(" pad=");
  if (pad != std::string::npos) {
    p.pad = parse_int(std::string_view(rest).substr(pad + 5), line_no);
    rest.resize(pad);
  }
  p.segment = parse_int(rest, line_no);
  return p;
}

}  // namespace

std::string format_token(const OctupleToken& token) {
  std::string out;
  for (size_t f = 0; f < token.ids.size(); ++f) {
    if (f) out += ' ';
    out += std::to_string(token.ids[f]);
  }
  return out;
}

OctupleToken parse_token_line(const std::string& line) {
  std::istringstream ss(line);
  OctupleToken t;
  for (auto& id : t.ids) {
    if (!(ss >> id)) throw Error(ErrorCode::kFormatError, "token line needs 8 ids: '" + line + "'");
  }
  std::string extra;
  if (ss >> extra) throw Error(ErrorCode::kFormatError, "token line has more than 8 ids: '" + line + "'");
  return t;
}

void write_sequence(std::ostream& out, const TokenSequence& seq) {
  out << "# source=" << seq.provenance.source << " segment=" << seq.provenance.segment;
  if (seq.provenance.pad > 0) out << " pad=" << seq.provenance.pad;
  out << '\n';
  for (const auto& t : seq.tokens) out << format_token(t) << '\n';
}

void write_sequences(std::ostream& out, std::span<const TokenSequence> seqs) {
  for (const auto& s : seqs) write_sequence(out, s);
}

std::vector<TokenSequence> read_sequences(std::istream& in) {
  std::vector<TokenSequence> seqs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      seqs.emplace_back();
      seqs.back().provenance = parse_header(line, line_no);
      continue;
    }
    if (seqs.empty()) format_error(line_no, "token before the first '#' header");
    try {
      seqs.back().tokens.push_back(parse_token_line(line));
    } catch (const Error& e) {
      format_error(line_no, e.what());
    }
  }
  return seqs;
}

std::vector<TokenSequence> read_sequence_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_sequences(f);
}

void write_sequence_file(const std::filesystem::path& path, std::span<const TokenSequence> seqs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_sequences(f, seqs);
}

}  // namespace octomidi
