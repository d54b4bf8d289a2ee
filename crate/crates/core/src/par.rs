//! Data-parallel helpers. With the `parallel` feature they run on the rayon
//! pool; without it they are plain loops. Results keep input order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_seq<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_par<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

pub fn for_each_mut_seq<T>(items: &mut [T], f: impl Fn(&mut T)) {
    items.iter_mut().for_each(f)
}

#[cfg(feature = "parallel")]
pub fn for_each_mut_par<T: Send>(items: &mut [T], f: impl Fn(&mut T) + Sync + Send) {
    items.par_iter_mut().for_each(f)
}

#[cfg(feature = "parallel")]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    map_par(items, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    map_seq(items, f)
}

#[cfg(feature = "parallel")]
pub fn for_each_mut<T: Send>(items: &mut [T], f: impl Fn(&mut T) + Sync + Send) {
    for_each_mut_par(items, f)
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_mut<T: Send>(items: &mut [T], f: impl Fn(&mut T) + Sync + Send) {
    for_each_mut_seq(items, f)
}

/// Parallel only when there is enough work to pay for the fan-out.
pub fn for_each_mut_sized<T: Send>(items: &mut [T], min_par: usize, f: impl Fn(&mut T) + Sync + Send) {
    if items.len() >= min_par {
        for_each_mut(items, f)
    } else {
        for_each_mut_seq(items, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v: Vec<u64> = (0..1000).collect();
        let want = map_seq(&v, |x| x * x);
        assert_eq!(map(&v, |x| x * x), want);
        let mut w = v.clone();
        for_each_mut(&mut w, |x| *x *= 2);
        assert_eq!(w, map_seq(&v, |x| x * 2));
    }
}
