#pragma once

#include "eas/crypto.hpp"
#include "eas/exam_session.hpp"
#include "eas/psychometrics.hpp"
#include "eas/question_bank.hpp"

#include <json.hpp>

#include <optional>

namespace eas {

using Json = nlohmann::json;

/// Canonical serialization: sorted keys, no whitespace, UTF-8.
std::string canonical_dump(const Json& j);

void to_json(Json& j, const Choice& c);
void from_json(const Json& j, Choice& c);
void to_json(Json& j, const Question& q);
void from_json(const Json& j, Question& q);
void to_json(Json& j, const QuestionBank& b);
void from_json(const Json& j, QuestionBank& b);
void to_json(Json& j, const ExamDefinition& e);
void from_json(const Json& j, ExamDefinition& e);
void to_json(Json& j, const Examinee& e);
void from_json(const Json& j, Examinee& e);
void to_json(Json& j, const Credential& c);
void from_json(const Json& j, Credential& c);
void to_json(Json& j, const ExamSession& s);
void from_json(const Json& j, ExamSession& s);
void to_json(Json& j, const TestResult& r);
void from_json(const Json& j, TestResult& r);

/// Examinee-facing; never carries an answer key.
void to_json(Json& j, const PresentedQuestion& q);

Json timestamp_json(const std::optional<Timestamp>& t);
std::optional<Timestamp> timestamp_from_json(const Json& j);

}  // namespace eas

namespace eas::crypto {
void to_json(Json& j, const PasswordHash& h);
void from_json(const Json& j, PasswordHash& h);
}  // namespace eas::crypto

namespace eas::psychometrics {
void to_json(Json& j, const DifficultyRecord& r);
void to_json(Json& j, const DiscriminationRecord& r);
void to_json(Json& j, const GroupPartition& g);
void to_json(Json& j, const ItemAnalysisReport& r);
}  // namespace eas::psychometrics
