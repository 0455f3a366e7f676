use crate::ir::VarId;

use crate::domain::Domain;

/// Abstract environment: one optional value per program variable, or the
/// empty environment of an infeasible path.
#[derive(Clone, Debug, PartialEq)]
pub enum Env<V> {
    Bottom,
    Live(Vec<Option<V>>),
}

impl<V: Clone> Env<V> {
    pub fn new(vars: usize) -> Self {
        Env::Live(vec![None; vars])
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Env::Bottom)
    }

    pub fn get(&self, v: VarId) -> Option<&V> {
        match self {
            Env::Bottom => None,
            Env::Live(vals) => vals.get(v.index()).and_then(Option::as_ref),
        }
    }

    /// Binds `v`. No effect on the bottom environment.
    pub fn set(&mut self, v: VarId, value: V) {
        if let Env::Live(vals) = self {
            if vals.len() <= v.index() {
                vals.resize(v.index() + 1, None);
            }
            vals[v.index()] = Some(value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &V)> {
        let vals: &[Option<V>] = match self {
            Env::Bottom => &[],
            Env::Live(vals) => vals,
        };
        vals.iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_ref().map(|v| (VarId(i as u32), v)))
    }

    /// Pointwise join. A variable bound on one side only keeps that value.
    pub fn join<D: Domain<Value = V>>(&self, other: &Self, d: &D) -> Self {
        match (self, other) {
            (Env::Bottom, e) | (e, Env::Bottom) => e.clone(),
            (Env::Live(a), Env::Live(b)) => {
                let n = a.len().max(b.len());
                let get = |xs: &[Option<V>], i: usize| xs.get(i).cloned().flatten();
                Env::Live(
                    (0..n)
                        .map(|i| match (get(a, i), get(b, i)) {
                            (Some(x), Some(y)) => Some(d.join(&x, &y)),
                            (x, y) => x.or(y),
                        })
                        .collect(),
                )
            }
        }
    }
}
