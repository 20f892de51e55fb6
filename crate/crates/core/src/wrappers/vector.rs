use crate::error::{Error, Result};

/// `[time_fraction, one_hot(keys_held; max_keys + 1)]`.
pub fn encode_vector_obs(remaining_time_fraction: f64, keys_held: usize, max_keys: usize) -> Result<Vec<f64>> {
    if keys_held > max_keys {
        return Err(Error::Contract(format!("keys_held {keys_held} exceeds max_keys {max_keys}")));
    }
    let mut v = vec![0.0; 2 + max_keys];
    v[0] = remaining_time_fraction;
    v[1 + keys_held] = 1.0;
    Ok(v)
}

pub fn vector_obs_len(max_keys: usize) -> usize {
    2 + max_keys
}
