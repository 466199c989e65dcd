use crate::error::Result;
use crate::experience::ActionId;

/// Anything that maps a state to an action: teachers, nearest-boundary
/// students and decision trees alike.
pub trait Policy {
    fn act(&self, state: &[f64]) -> Result<ActionId>;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        (**self).act(state)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        (**self).act(state)
    }
}

/// Always answers with the same action.
#[derive(Clone, Copy, Debug)]
pub struct ConstantPolicy(pub ActionId);

impl Policy for ConstantPolicy {
    fn act(&self, _state: &[f64]) -> Result<ActionId> {
        Ok(self.0)
    }
}

/// Adapts a closure into a policy.
pub struct FnPolicy<F>(pub F);

impl<F> Policy for FnPolicy<F>
where
    F: Fn(&[f64]) -> ActionId,
{
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        Ok((self.0)(state))
    }
}
