//! Serde helpers: arbitrary-precision integers travel as decimal strings so
//! JSON stays valid for any consumer.

pub mod bigint_vec {
    use num_bigint::BigInt;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<BigInt>, D::Error> {
        let strings = Vec::<String>::deserialize(de)?;
        strings
            .into_iter()
            .map(|s| s.parse::<BigInt>().map_err(D::Error::custom))
            .collect()
    }
}

pub mod rational {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Signed;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq([v.numer().to_string(), v.denom().to_string()])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigRational, D::Error> {
        let [n, d] = <[String; 2]>::deserialize(de)?;
        let num: BigInt = n.parse().map_err(D::Error::custom)?;
        let den: BigInt = d.parse().map_err(D::Error::custom)?;
        if !den.is_positive() {
            return Err(D::Error::custom("denominator must be positive"));
        }
        Ok(BigRational::new(num, den))
    }
}
