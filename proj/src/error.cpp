#include "eas/error.hpp"

namespace eas {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::InvalidChoiceSet: return "InvalidChoiceSet";
        case ErrorCode::EmptyStem: return "EmptyStem";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::AlreadyIssued: return "AlreadyIssued";
        case ErrorCode::ExamNotFound: return "ExamNotFound";
        case ErrorCode::BankTooSmall: return "BankTooSmall";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::BadPassword: return "BadPassword";
        case ErrorCode::AlreadyStarted: return "AlreadyStarted";
        case ErrorCode::AlreadyFinalized: return "AlreadyFinalized";
        case ErrorCode::SessionNotActive: return "SessionNotActive";
        case ErrorCode::UnknownQuestion: return "UnknownQuestion";
        case ErrorCode::InvalidLabel: return "InvalidLabel";
        case ErrorCode::DeadlineExceeded: return "DeadlineExceeded";
        case ErrorCode::InvalidExam: return "InvalidExam";
        case ErrorCode::UnknownExaminee: return "UnknownExaminee";
        case ErrorCode::MixedExams: return "MixedExams";
        case ErrorCode::UnknownItem: return "UnknownItem";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::TooFewExaminees: return "TooFewExaminees";
        case ErrorCode::PartitionMismatch: return "PartitionMismatch";
        case ErrorCode::InvalidMatrix: return "InvalidMatrix";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::InvalidSummary: return "InvalidSummary";
        case ErrorCode::TooFewGroups: return "TooFewGroups";
        case ErrorCode::DegenerateWithin: return "DegenerateWithin";
        case ErrorCode::OutOfScale: return "OutOfScale";
        case ErrorCode::WrongArity: return "WrongArity";
        case ErrorCode::StorageFull: return "StorageFull";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::CorruptEvent: return "CorruptEvent";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::BadCredentials: return "BadCredentials";
        case ErrorCode::AccountInactive: return "AccountInactive";
        case ErrorCode::Unauthorized: return "Unauthorized";
        case ErrorCode::Forbidden: return "Forbidden";
        case ErrorCode::UnknownUser: return "UnknownUser";
        case ErrorCode::DuplicateUsername: return "DuplicateUsername";
        case ErrorCode::UnknownExam: return "UnknownExam";
        case ErrorCode::UnknownSubject: return "UnknownSubject";
        case ErrorCode::AnalysisUnavailable: return "AnalysisUnavailable";
        case ErrorCode::LockedOut: return "LockedOut";
        case ErrorCode::BadRequest: return "BadRequest";
        case ErrorCode::NotFound: return "NotFound";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error::Error(ErrorCode code) : Error(code, std::string(to_string(code))) {}

}  // namespace eas
