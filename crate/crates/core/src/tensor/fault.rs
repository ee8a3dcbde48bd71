//! Deliberate corruption of one backward rule, used as a negative control
//! for the gradient checker.

use std::cell::Cell;

use super::OpKind;

thread_local! {
    static FAULTY: Cell<Option<OpKind>> = const { Cell::new(None) };
}

/// Restores the previous fault setting when dropped.
#[must_use = "the fault is cleared when the guard drops"]
pub struct FaultGuard {
    previous: Option<OpKind>,
}

impl Drop for FaultGuard {
    fn drop(&mut self) {
        FAULTY.with(|f| f.set(self.previous));
    }
}

/// Corrupts the backward rule of `kind` on the current thread until the
/// returned guard is dropped. The corrupted rule returns `1.5·g + 0.05` for
/// every input gradient `g` it would otherwise produce.
pub fn inject_fault(kind: Option<OpKind>) -> FaultGuard {
    let previous = FAULTY.with(|f| f.replace(kind));
    FaultGuard { previous }
}

pub(crate) fn corrupt_if_faulty(kind: OpKind, grad: &mut [f64]) {
    if FAULTY.with(|f| f.get()) == Some(kind) {
        for g in grad.iter_mut() {
            *g = 1.5 * *g + 0.05;
        }
    }
}
