#ifndef OCTOMIDI_TOKEN_IO_H_
#define OCTOMIDI_TOKEN_IO_H_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "octomidi/octuple.h"

namespace octomidi {

// Token text format. Each sequence starts with a provenance header
//
//   # source=<name> segment=<k>[ pad=<n>]
//
// followed by one token per line as 8 space-separated ids. Blank lines are
// ignored. A file may hold many sequences.
std::string format_token(const OctupleToken& token);
OctupleToken parse_token_line(const std::string& line);

void write_sequence(std::ostream& out, const TokenSequence& seq);
void write_sequences(std::ostream& out, std::span<const TokenSequence> seqs);
std::vector<TokenSequence> read_sequences(std::istream& in);

std::vector<TokenSequence> read_sequence_file(const std::filesystem::path& path);
void write_sequence_file(const std::filesystem::path& path, std::span<const TokenSequence> seqs);

}  // namespace octomidi

#endif  // OCTOMIDI_TOKEN_IO_H_
