#include "octomidi/token_io.h"

#include <gtest/gtest.h>

#include <sstream>

#include "octomidi/error.h"
#include "test_util.h"

namespace octomidi {
namespace {

TEST(TokenIoTest, ExactText) {
  TokenSequence seq;
  seq.provenance = {"piece.mid", 3, 0};
  seq.tokens.push_back(testing::make_token(0, 0, 60, 16));
  seq.tokens.push_back(OctupleToken::filled(kMaskId));
  std::ostringstream out;
  write_sequence(out, seq);
  EXPECT_EQ(out.str(), "# source=piece.mid segment=3\n17 27 4 4 4 64 19 20\n3 3 3 3 3 3 3 3\n");
  seq.provenance.pad = 1022;
  std::ostringstream padded;
  write_sequence(padded, seq);
  EXPECT_EQ(padded.str().substr(0, padded.str().find('\n')), "# source=piece.mid segment=3 pad=1022");
}

TEST(TokenIoTest, RoundTripManySequences) {
  std::vector<TokenSequence> seqs;
  for (int k = 0; k < 5; ++k) {
    TokenSequence s = testing::bar_stream(k + 1, 3);
    s.provenance = {"dir/with space/f" + std::to_string(k) + ".mid", k, k * 7};
    seqs.push_back(s);
  }
  seqs.push_back(TokenSequence{{}, {"empty.mid", 0, 1024}});
  std::ostringstream out;
  write_sequences(out, seqs);
  std::istringstream in(out.str());
  EXPECT_EQ(read_sequences(in), seqs);
}

TEST(TokenIoTest, FileHelpers) {
  auto dir = testing::temp_dir("token_io");
  std::vector<TokenSequence> seqs = {testing::quarter_stream(9)};
  seqs[0].provenance.source = "q";
  write_sequence_file(dir / "a.tok", seqs);
  EXPECT_EQ(read_sequence_file(dir / "a.tok"), seqs);
  EXPECT_THROW(read_sequence_file(dir / "missing.tok"), Error);
}

TEST(TokenIoTest, BlankLinesAndCrlfTolerated) {
  std::istringstream in("# source=a segment=0\r\n\r\n1 1 1 1 1 1 1 1\r\n\n2 2 2 2 2 2 2 2\n");
  const auto seqs = read_sequences(in);
  ASSERT_EQ(seqs.size(), 1u);
  EXPECT_EQ(seqs[0].tokens.size(), 2u);
}

TEST(TokenIoTest, Rejections) {
  const std::string bad[] = {
      "1 2 3 4 5 6 7 8\n",
      "# source=a segment=0\n1 2 3 4 5 6 7\n",
      "# source=a segment=0\n1 2 3 4 5 6 7 8 9\n",
      "# source=a segment=0\n1 2 x 4 5 6 7 8\n",
      "# source=a\n",
      "# source=a segment=z\n",
  };
  for (const auto& text : bad) {
    std::istringstream in(text);
    try {
      read_sequences(in);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormatError) << text;
    }
  }
}

}  // namespace
}  // namespace octomidi
