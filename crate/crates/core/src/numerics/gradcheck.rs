use crate::numerics::{Graph, NumericsError, ParamStore, Var};
use crate::scalar::Scalar;

/// Compares reverse-mode gradients with central finite differences over
/// every coordinate of every parameter in `store`.
///
/// `build` records the loss into a fresh graph; it is called once for the
/// analytic gradient and twice per coordinate. Returns the largest
/// `|a - n| / max(|a|, |n|, 1e-8)`. The store is restored afterwards.
pub fn grad_check<T, E, F>(store: &mut ParamStore<T>, mut build: F, epsilon: T) -> Result<T, E>
where
    T: Scalar,
    E: From<NumericsError>,
    F: for<'p> FnMut(&mut Graph<'p, T>) -> Result<Var, E>,
{
    let eps = epsilon.to_f64_lossy();
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(NumericsError::InvalidEpsilon(eps).into());
    }

    let analytic = {
        let mut graph = Graph::new(store);
        let loss = build(&mut graph)?;
        graph.backward(loss)?
    };

    let mut eval = |store: &ParamStore<T>| -> Result<T, E> {
        let mut graph = Graph::new(store);
        let loss = build(&mut graph)?;
        Ok(graph.value(loss).item())
    };

    let floor = T::of(1e-8);
    let two = T::of(2.0);
    let mut worst = T::zero();
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for k in 0..store.get(id).len() {
            let original = store.get(id).data()[k];
            store.get_mut(id).data_mut()[k] = original + epsilon;
            let plus = eval(store);
            store.get_mut(id).data_mut()[k] = original - epsilon;
            let minus = eval(store);
            store.get_mut(id).data_mut()[k] = original;
            let numeric = (plus? - minus?) / (two * epsilon);
            let a = analytic.get(id).data()[k];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
