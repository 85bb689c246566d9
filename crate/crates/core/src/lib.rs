pub mod error;
pub mod exponents;
pub mod gfq;
pub mod intmat;
pub mod qexp;
pub mod ring;
pub mod sample;
pub mod shape;
pub mod weights;

pub use error::{Error, Result};
pub use gfq::{FieldConfig, GfContext, GfElement};
pub use intmat::IntMatrix;
pub use shape::{FieldShape, PrimeShape, ResidueIndex, ShapeConfig, ThetaIndex};
pub use weights::{PsiCharacter, Rational, WeightVector};
pub use exponents::{Exponent, ExponentModel, ModelConfig};
pub use qexp::{ModelRef, QExpansion, QExpansionRecord};
pub use ring::{CharacterBucketSum, GradedElement, ProbeVerdict};
