use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RouteError;

/// Bijection between logical and physical qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mapping {
    log_to_phys: Vec<usize>,
    phys_to_log: Vec<usize>,
}

impl Mapping {
    /// Builds a mapping from its logical-to-physical array, which must be a
    /// permutation of `0..len`.
    pub fn new(log_to_phys: Vec<usize>) -> Result<Self, RouteError> {
        let n = log_to_phys.len();
        let mut phys_to_log = vec![usize::MAX; n];
        for (l, &p) in log_to_phys.iter().enumerate() {
            if p >= n || phys_to_log[p] != usize::MAX {
                return Err(RouteError::InvalidMapping(format!(
                    "{log_to_phys:?} is not a permutation"
                )));
            }
            phys_to_log[p] = l;
        }
        Ok(Self {
            log_to_phys,
            phys_to_log,
        })
    }

    pub fn len(&self) -> usize {
        self.log_to_phys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_to_phys.is_empty()
    }

    pub fn phys(&self, logical: usize) -> usize {
        self.log_to_phys[logical]
    }

    pub fn logical(&self, physical: usize) -> usize {
        self.phys_to_log[physical]
    }

    pub fn log_to_phys(&self) -> &[usize] {
        &self.log_to_phys
    }

    pub fn phys_to_log(&self) -> &[usize] {
        &self.phys_to_log
    }

    /// Exchanges the logical qubits sitting on physical qubits `a` and `b`.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.phys_to_log[a], self.phys_to_log[b]);
        self.phys_to_log.swap(a, b);
        self.log_to_phys[la] = b;
        self.log_to_phys[lb] = a;
    }

    /// Both arrays are permutations and mutually inverse.
    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        self.phys_to_log.len() == n
            && self
                .log_to_phys
                .iter()
                .enumerate()
                .all(|(l, &p)| p < n && self.phys_to_log[p] == l)
    }
}

/// Logical qubit `i` on physical qubit `i`.
pub fn trivial_mapping(n: usize) -> Mapping {
    let identity: Vec<usize> = (0..n).collect();
    Mapping {
        log_to_phys: identity.clone(),
        phys_to_log: identity,
    }
}

/// Uniformly random permutation, reproducible per seed.
pub fn random_mapping(n: usize, seed: u64) -> Mapping {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    Mapping::new(perm).expect("shuffled identity is a permutation")
}
