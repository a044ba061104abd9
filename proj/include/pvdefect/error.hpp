#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pvdefect {

enum class Errc {
    FileNotFound,
    UnsupportedFormat,
    CorruptImage,
    ChannelMismatch,
    ZeroDimension,
    InvalidDiameter,
    WindowShapeError,
    NonPositiveGamma,
    InvalidConfig,
    InvalidTurns,
    ShiftTooLarge,
    EmptyDataset,
    ImageTooSmall,
    EmptySelection,
    BadMagic,
    VersionUnsupported,
    DimMismatch,
    DuplicateId,
    TruncatedFile,
    EmptyLabels,
    OrderViolation,
    DuplicateBlock,
    SignatureMismatch,
    EmptyMatrix,
    SingleClass,
    NonFiniteFeature,
    KindMismatch,
    Corrupt,
    ClassTooSmall,
    LengthMismatch,
    LabelOutOfRange,
    MissingFeatures,
    EmptyReport,
    IoError,
    InvalidArgument,
};

inline std::string_view errc_name(Errc e) {
    switch (e) {
        case Errc::FileNotFound: return "FileNotFound";
        case Errc::UnsupportedFormat: return "UnsupportedFormat";
        case Errc::CorruptImage: return "CorruptImage";
        case Errc::ChannelMismatch: return "ChannelMismatch";
        case Errc::ZeroDimension: return "ZeroDimension";
        case Errc::InvalidDiameter: return "InvalidDiameter";
        case Errc::WindowShapeError: return "WindowShapeError";
        case Errc::NonPositiveGamma: return "NonPositiveGamma";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::InvalidTurns: return "InvalidTurns";
        case Errc::ShiftTooLarge: return "ShiftTooLarge";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::ImageTooSmall: return "ImageTooSmall";
        case Errc::EmptySelection: return "EmptySelection";
        case Errc::BadMagic: return "BadMagic";
        case Errc::VersionUnsupported: return "VersionUnsupported";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::TruncatedFile: return "TruncatedFile";
        case Errc::EmptyLabels: return "EmptyLabels";
        case Errc::OrderViolation: return "OrderViolation";
        case Errc::DuplicateBlock: return "DuplicateBlock";
        case Errc::SignatureMismatch: return "SignatureMismatch";
        case Errc::EmptyMatrix: return "EmptyMatrix";
        case Errc::SingleClass: return "SingleClass";
        case Errc::NonFiniteFeature: return "NonFiniteFeature";
        case Errc::KindMismatch: return "KindMismatch";
        case Errc::Corrupt: return "Corrupt";
        case Errc::ClassTooSmall: return "ClassTooSmall";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::LabelOutOfRange: return "LabelOutOfRange";
        case Errc::MissingFeatures: return "MissingFeatures";
        case Errc::EmptyReport: return "EmptyReport";
        case Errc::IoError: return "IoError";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace pvdefect
