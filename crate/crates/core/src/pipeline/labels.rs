use crate::error::{Error, Result};

/// 1 when any future link-status entry is blocked.
pub fn label_occurrence(status_window: &[u8]) -> Result<u8> {
    if status_window.is_empty() {
        return Err(Error::InvalidInput("empty prediction window".into()));
    }
    Ok(u8::from(status_window.contains(&1)))
}

/// 1-based index of the first blocked entry of the future window.
pub fn label_instance(status_future: &[u8]) -> Result<u32> {
    status_future
        .iter()
        .position(|&x| x == 1)
        .map(|i| i as u32 + 1)
        .ok_or_else(|| Error::NotApplicable("no blockage inside the prediction window".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn occurrence_examples() {
        assert_eq!(label_occurrence(&[0, 0, 0, 0]).unwrap(), 0);
        assert_eq!(label_occurrence(&[0, 0, 1, 0]).unwrap(), 1);
        assert!(label_occurrence(&[]).is_err());
    }

    #[test]
    fn instance_examples() {
        assert_eq!(label_instance(&[1, 0, 0]).unwrap(), 1);
        assert_eq!(label_instance(&[0, 0, 1]).unwrap(), 3);
        assert!(matches!(label_instance(&[0, 0, 0]), Err(Error::NotApplicable(_))));
    }

    proptest! {
        #[test]
        fn occurrence_matches_scan(w in prop::collection::vec(0u8..=1, 1..40)) {
            let mut any = 0;
            for &x in &w {
                if x == 1 { any = 1; }
            }
            prop_assert_eq!(label_occurrence(&w).unwrap(), any);
        }

        #[test]
        fn instance_matches_scan(mut w in prop::collection::vec(0u8..=1, 1..40), at in 0usize..40) {
            let at = at % w.len();
            w[at] = 1;
            let mut first = 0;
            for (i, &x) in w.iter().enumerate() {
                if x == 1 { first = i + 1; break; }
            }
            prop_assert_eq!(label_instance(&w).unwrap() as usize, first);
        }
    }
}
