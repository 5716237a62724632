#pragma once

#include <stdexcept>
#include <string>

namespace boweldet {

/// Root of every error raised by the library. The CLI maps subclasses of
/// `UserError` to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UserError : public Error {
public:
    using Error::Error;
};

#define BOWELDET_ERROR(Name, Base)                 \
    class Name : public Base {                     \
    public:                                        \
        using Base::Base;                          \
    };

// audio
BOWELDET_ERROR(DecodeError, UserError)
BOWELDET_ERROR(UnsupportedFormat, UserError)
BOWELDET_ERROR(InvalidCutoff, UserError)
// spectrogram
BOWELDET_ERROR(InvalidFrequency, UserError)
BOWELDET_ERROR(SignalTooShort, UserError)
BOWELDET_ERROR(InvalidConfig, UserError)
// dataset
BOWELDET_ERROR(ParseError, UserError)
BOWELDET_ERROR(InvalidInterval, UserError)
BOWELDET_ERROR(EmptyClassError, UserError)
// engine
BOWELDET_ERROR(ShapeError, Error)
BOWELDET_ERROR(StateError, Error)
BOWELDET_ERROR(InvalidHyperparameter, UserError)
BOWELDET_ERROR(CorruptModel, UserError)
BOWELDET_ERROR(TrainingDiverged, Error)
// inference / metrics
BOWELDET_ERROR(WindowTooLarge, UserError)
BOWELDET_ERROR(IncompatibleModel, UserError)
BOWELDET_ERROR(MaskLengthError, UserError)
BOWELDET_ERROR(EvaluationError, UserError)
// synthetic corpus
BOWELDET_ERROR(PackingError, UserError)

#undef BOWELDET_ERROR

}  // namespace boweldet
