//! Rotation algebra, the articulated skeleton and the pinhole camera.

mod camera;
mod hand;
mod rotation;
mod skeleton;

pub use camera::{project, Camera};
pub use hand::{
    chordal_mean_quaternion, cos_dist, mean_pose, reflect_hand_pose, slerp_pose, HandBasis,
    HandPose, MirrorConvention, FINGERS, HAND_DOF, HAND_JOINTS,
};
pub use rotation::{left_jacobian, skew, slerp_quaternion, JointRotation};
pub use skeleton::{
    forward_kinematics, BendJoint, BodyPose, KeypointBinding, NodeRef, Positions, Site, Skeleton,
    SkeletonFile,
};
pub(crate) use skeleton::forward_kinematics_local;
