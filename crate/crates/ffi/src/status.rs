//! Status codes, the per-thread error message, and the panic barrier.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};

use srpcr::Error;

/// Result of every fallible call. `SRPCR_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrpcrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    DimensionMismatch = 3,
    InvalidInput = 4,
    NotSpd = 5,
    IcBreakdown = 6,
    NumericalBreakdown = 7,
    Breakdown = 8,
    RSingular = 9,
    OrthogonalityCollapse = 10,
    Parse = 11,
    Archive = 12,
    Io = 13,
    Other = 14,
    Panic = 15,
}

impl From<&Error> for SrpcrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } => SrpcrStatus::DimensionMismatch,
            Error::NumericalBreakdown(_) => SrpcrStatus::NumericalBreakdown,
            Error::InvalidInput(_) => SrpcrStatus::InvalidInput,
            Error::NotSpd(_) => SrpcrStatus::NotSpd,
            Error::IcBreakdown { .. } => SrpcrStatus::IcBreakdown,
            Error::Breakdown { .. } => SrpcrStatus::Breakdown,
            Error::RSingular { .. } => SrpcrStatus::RSingular,
            Error::OrthogonalityCollapse { .. } => SrpcrStatus::OrthogonalityCollapse,
            Error::Parse { .. } => SrpcrStatus::Parse,
            Error::Archive(_) => SrpcrStatus::Archive,
            Error::Io(_) => SrpcrStatus::Io,
            _ => SrpcrStatus::Other,
        }
    }
}

/// Failure inside an exported call, before it becomes a status code.
pub(crate) struct Failure {
    pub status: SrpcrStatus,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            status: SrpcrStatus::from(&e),
            message: format!("{}: {e}", e.tag()),
        }
    }
}

pub(crate) fn null(what: &str) -> Failure {
    Failure {
        status: SrpcrStatus::NullPointer,
        message: format!("null pointer: {what}"),
    }
}

pub(crate) fn invalid(message: String) -> Failure {
    Failure {
        status: SrpcrStatus::InvalidInput,
        message,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, records a message for any failure, and never unwinds into C.
pub(crate) fn guard(f: impl FnOnce() -> Result<(), Failure> + UnwindSafe) -> SrpcrStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(f) {
        Ok(Ok(())) => SrpcrStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let text = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {text}"));
            SrpcrStatus::Panic
        }
    }
}

/// Message of the last failed call on this thread, or null after a success.
///
/// The pointer stays valid until the next `srpcr_*` call on the same thread.
#[no_mangle]
pub extern "C" fn srpcr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code, e.g. `"not-spd"`.
#[no_mangle]
pub extern "C" fn srpcr_status_name(status: SrpcrStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        SrpcrStatus::Ok => b"ok\0",
        SrpcrStatus::NullPointer => b"null-pointer\0",
        SrpcrStatus::InvalidUtf8 => b"invalid-utf8\0",
        SrpcrStatus::DimensionMismatch => b"dimension-mismatch\0",
        SrpcrStatus::InvalidInput => b"invalid-input\0",
        SrpcrStatus::NotSpd => b"not-spd\0",
        SrpcrStatus::IcBreakdown => b"ic-breakdown\0",
        SrpcrStatus::NumericalBreakdown => b"numerical-breakdown\0",
        SrpcrStatus::Breakdown => b"breakdown\0",
        SrpcrStatus::RSingular => b"r-singular\0",
        SrpcrStatus::OrthogonalityCollapse => b"orthogonality-collapse\0",
        SrpcrStatus::Parse => b"parse-error\0",
        SrpcrStatus::Archive => b"archive-error\0",
        SrpcrStatus::Io => b"io-error\0",
        SrpcrStatus::Other => b"other\0",
        SrpcrStatus::Panic => b"panic\0",
    };
    s.as_ptr().cast()
}
