#include <gtest/gtest.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <map>

#include <nlohmann/json.hpp>

#include "fixture_server.hpp"
#include "helpers.hpp"
#include "pirate/errors.hpp"
#include "pirate/llm.hpp"
#include "pirate/text.hpp"

namespace pirate {
namespace {

TEST(PromptTemplate, RequiresItsPlaceholderOnce) {
  EXPECT_NO_THROW(PromptTemplate(PromptKind::AnchorsFromText, "Keywords for: {text}"));
  EXPECT_THROW(PromptTemplate(PromptKind::AnchorsFromText, "no slot"), ContractViolation);
  EXPECT_THROW(PromptTemplate(PromptKind::AnchorsFromText, "{text} and {text}"), ContractViolation);
  EXPECT_THROW(PromptTemplate(PromptKind::AnchorsFromText, "{text} {anchors}"), ContractViolation);
  EXPECT_THROW(PromptTemplate(PromptKind::BaseQueryFromAnchors, "{text}"), ContractViolation);
  const PromptTemplate t(PromptKind::BaseQueryFromAnchors, "Ask about {anchors}.");
  EXPECT_EQ(t.render("fever and cough"), "Ask about fever and cough.");
  EXPECT_NO_THROW(PromptTemplate::defaults(PromptKind::AnchorsFromText));
  EXPECT_NO_THROW(PromptTemplate::defaults(PromptKind::BaseQueryFromAnchors));
}

TEST(MockLlm, BaseQueryIsDeterministicAndMentionsAnchors) {
  MockLlm a(7), b(7);
  const std::vector<std::string> one{"fever"};
  EXPECT_EQ(a.generate_base_query(one), b.generate_base_query(one));
  EXPECT_NE(a.generate_base_query(one).find("fever"), std::string::npos);

  const std::vector<std::string> three{"a", "b", "c"};
  const auto q = a.generate_base_query(three);
  for (const auto& w : three) EXPECT_NE(q.find(w), std::string::npos);
  EXPECT_THROW(a.generate_base_query(std::vector<std::string>{}), ContractViolation);
}

TEST(MockLlm, BaseQueryContainsEveryAnchorOverManyTrials) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    MockLlm llm(rng.next());
    std::vector<std::string> anchors;
    for (std::size_t i = 0, n = 1 + rng.below(3); i < n; ++i)
      anchors.push_back(testing::vocabulary()[rng.below(testing::vocabulary().size())]);
    const auto q = llm.generate_base_query(anchors);
    EXPECT_EQ(q.find('\n'), std::string::npos);
    for (const auto& a : anchors) ASSERT_NE(q.find(a), std::string::npos) << q;
  }
}

TEST(MockLlm, ExtractByTermFrequency) {
  MockLlm llm(1, 2);
  const std::vector<std::string> chunk{"fever fever cough"};
  EXPECT_EQ(llm.extract_anchors(chunk), (std::vector<std::string>{"fever", "cough"}));
  const std::vector<std::string> stop_only{"the and of to in it"};
  EXPECT_TRUE(llm.extract_anchors(stop_only).empty());
  const std::vector<std::string> blank{"  "};
  EXPECT_THROW(llm.extract_anchors(blank), ContractViolation);
}

TEST(MockLlm, ExtractMatchesReferenceCounter) {
  const MockLlm llm(33, 3);
  Rng rng(22);
  std::vector<std::string> chunks;
  for (int i = 0; i < 20; ++i) chunks.push_back(testing::random_text(rng, 12) + ", the patient; and a " +
                                               testing::random_text(rng, 4) + ".");
  // Per chunk: count lowercase alphabetic words not in the stopword list,
  // rank by count then by the documented tie-break key, then merge in order.
  std::vector<std::string> expected;
  for (const auto& c : chunks) {
    std::map<std::string, int> tf;
    std::string word;
    auto flush = [&] {
      if (word.size() >= 2 && !stopwords().contains(word)) ++tf[word];
      word.clear();
    };
    for (char ch : c) {
      if (std::isalpha(static_cast<unsigned char>(ch))) word += static_cast<char>(std::tolower(ch));
      else flush();
    }
    flush();
    std::vector<std::pair<std::string, int>> v(tf.begin(), tf.end());
    std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return llm.tiebreak(a.first) < llm.tiebreak(b.first);
    });
    for (std::size_t i = 0; i < v.size() && i < 3; ++i)
      if (std::find(expected.begin(), expected.end(), v[i].first) == expected.end()) expected.push_back(v[i].first);
  }
  MockLlm copy(33, 3);
  EXPECT_EQ(copy.extract_anchors(chunks), expected);
}

TEST(MockLlm, ExtractedAnchorsAreShortCleanKeywords) {
  MockLlm llm(5, 3);
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const std::vector<std::string> chunks{testing::random_text(rng, 10) + "\nx 7 " + testing::random_text(rng, 3)};
    for (const auto& a : llm.extract_anchors(chunks)) {
      EXPECT_GE(text::codepoint_count(a), 2u);
      EXPECT_EQ(a.find('\n'), std::string::npos);
      EXPECT_EQ(a, text::normalize(a));
    }
  }
}

TEST(MockLlm, ChatIsSeededAndDeterministic) {
  MockLlm a(3), b(3), c(4);
  const std::vector<ChatMessage> msgs{{"system", "be brief"}, {"user", "hello"}};
  EXPECT_EQ(a.chat(msgs), b.chat(msgs));
  EXPECT_NE(a.chat(msgs), c.chat(msgs));
  const std::vector<ChatMessage> bad{{"robot", "x"}};
  EXPECT_THROW(a.chat(bad), ContractViolation);
  EXPECT_THROW(a.chat(std::vector<ChatMessage>{}), ContractViolation);
}

TEST(KeywordList, ParsesCommonListShapes) {
  EXPECT_EQ(parse_keyword_list("1. Fever\n2) Night sweats\n- cough.\n* rash", 10),
            (std::vector<std::string>{"fever", "night sweats", "cough", "rash"}));
  EXPECT_EQ(parse_keyword_list("fever, cough; fever, x, 42", 10), (std::vector<std::string>{"fever", "cough"}));
  EXPECT_EQ(parse_keyword_list("\xE2\x80\xA2 3d printing", 10), (std::vector<std::string>{"3d printing"}));
  EXPECT_EQ(parse_keyword_list("a, bb, cc, dd", 2), (std::vector<std::string>{"bb", "cc"}));
  EXPECT_TRUE(parse_keyword_list("", 3).empty());
}

TEST(LlmSpec, Validation) {
  LlmSpec spec;
  EXPECT_NO_THROW(validate(spec));
  EXPECT_DOUBLE_EQ(spec.temperature, 0.8);
  spec.kind = LlmKind::Remote;
  EXPECT_THROW(validate(spec), ContractViolation);
  spec.endpoint = "http://127.0.0.1:1";
  spec.model_name = "m";
  EXPECT_NO_THROW(validate(spec));
  spec.temperature = 2.5;
  EXPECT_THROW(validate(spec), ContractViolation);
  spec.temperature = 0.8;
  spec.max_tokens = 0;
  EXPECT_THROW(validate(spec), ContractViolation);
}

TEST(Stopwords, VersionedListLoads) {
  EXPECT_EQ(kStopwordListVersion, "en-v1");
  EXPECT_TRUE(stopwords().contains("the"));
  EXPECT_FALSE(stopwords().contains("fever"));
}

// Chat endpoint that echoes the last message and records the request body.
class ChatFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.server().Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
      last_body_ = nlohmann::json::parse(req.body);
      if (fail_status_ != 0) {
        res.status = fail_status_;
        return;
      }
      nlohmann::json content = reply_.empty() ? last_body_["messages"].back()["content"] : nlohmann::json(reply_);
      nlohmann::json body{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
      if (drop_content_) body = nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}}}}}}};
      res.set_content(body.dump(), "application/json");
    });
    server_.start();
  }

  // Handlers touch fixture members, so stop before they are destroyed.
  void TearDown() override { server_.stop(); }

  LlmSpec spec() const {
    LlmSpec s;
    s.kind = LlmKind::Remote;
    s.endpoint = server_.endpoint();
    s.model_name = "attacker";
    s.temperature = 0.8;
    s.max_tokens = 64;
    s.timeout_s = 2.0;
    s.retries = 2;
    return s;
  }

  testing::FixtureServer server_;
  std::atomic<int> requests_{0};
  int delay_ms_ = 0;
  int fail_status_ = 0;
  bool drop_content_ = false;
  std::string reply_;
  nlohmann::json last_body_;
};

TEST_F(ChatFixture, ContentRoundTripsWithExactFields) {
  ChatClient client(server_.endpoint(), "attacker", 0.8, 64, HttpOptions{2.0, 0, 0.01, {}});
  const std::vector<ChatMessage> msgs{{"system", "s"}, {"user", "ping \xe2\x9c\x93"}};
  EXPECT_EQ(client.chat(msgs), "ping \xe2\x9c\x93");
  EXPECT_EQ(last_body_["model"], "attacker");
  EXPECT_DOUBLE_EQ(last_body_["temperature"].get<double>(), 0.8);
  EXPECT_EQ(last_body_["max_tokens"], 64);
  EXPECT_EQ(last_body_["messages"][0]["role"], "system");
  EXPECT_EQ(last_body_["messages"][1]["content"], "ping \xe2\x9c\x93");
}

TEST_F(ChatFixture, MissingContentIsProtocolError) {
  drop_content_ = true;
  ChatClient client(server_.endpoint(), "m", 0.8, 64, HttpOptions{2.0, 0, 0.01, {}});
  const std::vector<ChatMessage> msgs{{"user", "x"}};
  EXPECT_THROW(client.chat(msgs), ProtocolError);
}

TEST_F(ChatFixture, ServerErrorsRetryThenFail) {
  fail_status_ = 503;
  ChatClient client(server_.endpoint(), "m", 0.8, 64, HttpOptions{2.0, 2, 0.01, {}});
  const std::vector<ChatMessage> msgs{{"user", "x"}};
  EXPECT_THROW(client.chat(msgs), TransportError);
  EXPECT_EQ(requests_, 3);
}

TEST_F(ChatFixture, TimeoutsAreBoundedByRetryBudget) {
  delay_ms_ = 600;
  const double timeout = 0.2;
  const int retries = 2;
  ChatClient client(server_.endpoint(), "m", 0.8, 64, HttpOptions{timeout, retries, 0.01, {}});
  const std::vector<ChatMessage> msgs{{"user", "x"}};
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(client.chat(msgs), TransportError);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LE(elapsed, (retries + 1) * timeout + 0.15);
  EXPECT_GE(requests_, 1);
}

TEST_F(ChatFixture, RemoteLlmUsesTemplatesAndParsesKeywords) {
  RemoteLlm llm(spec());
  reply_ = "  What is known about fever?  \n";
  const std::vector<std::string> anchors{"fever"};
  EXPECT_EQ(llm.generate_base_query(anchors), "What is known about fever?");
  EXPECT_NE(last_body_["messages"][0]["content"].get<std::string>().find("fever"), std::string::npos);

  reply_ = "1. Fever\n2. Night sweats\n3. Cough\n4. Rash";
  const std::vector<std::string> chunks{"some chunk text"};
  EXPECT_EQ(llm.extract_anchors(chunks), (std::vector<std::string>{"fever", "night sweats", "cough"}));
  EXPECT_NE(last_body_["messages"][0]["content"].get<std::string>().find("some chunk text"), std::string::npos);

  reply_ = "!!! ???";
  EXPECT_TRUE(llm.extract_anchors(chunks).empty());
}

TEST_F(ChatFixture, EmptyGenerationIsGenerationError) {
  RemoteLlm llm(spec());
  reply_ = "   \n  ";
  const std::vector<std::string> anchors{"fever"};
  EXPECT_THROW(llm.generate_base_query(anchors), GenerationError);
}

TEST(MakeLlm, DispatchesOnKind) {
  LlmSpec spec;
  spec.seed = 9;
  auto llm = make_llm(spec);
  EXPECT_NE(dynamic_cast<MockLlm*>(llm.get()), nullptr);
}

}  // namespace
}  // namespace pirate
