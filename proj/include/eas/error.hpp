#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eas {

enum class ErrorCode {
    // question bank
    DuplicateId,
    InvalidChoiceSet,
    EmptyStem,
    MalformedHeader,
    // exam session
    AlreadyIssued,
    ExamNotFound,
    BankTooSmall,
    VersionMismatch,
    BadPassword,
    AlreadyStarted,
    AlreadyFinalized,
    SessionNotActive,
    UnknownQuestion,
    InvalidLabel,
    DeadlineExceeded,
    InvalidExam,
    // psychometrics
    UnknownExaminee,
    MixedExams,
    UnknownItem,
    EmptyMatrix,
    TooFewExaminees,
    PartitionMismatch,
    InvalidMatrix,
    // eval stats
    TooFewSamples,
    InvalidSummary,
    TooFewGroups,
    DegenerateWithin,
    OutOfScale,
    WrongArity,
    // storage
    StorageFull,
    SchemaViolation,
    CorruptEvent,
    IoError,
    // service
    BadCredentials,
    AccountInactive,
    Unauthorized,
    Forbidden,
    UnknownUser,
    DuplicateUsername,
    UnknownExam,
    UnknownSubject,
    AnalysisUnavailable,
    LockedOut,
    BadRequest,
    NotFound,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library surfaces as an Error carrying a stable code;
/// the code name is what the HTTP layer and the CLI report.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);
    explicit Error(ErrorCode code);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace eas
