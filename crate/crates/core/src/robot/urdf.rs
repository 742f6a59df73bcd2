//! URDF subset parser. Supported: `link` with one `collision` or `visual`
//! geometry (`mesh` by filename, `box`, `sphere`, `cylinder`) and an
//! `origin`; `joint` with `type`, `parent`, `child`, `origin`, `axis`, and
//! `limit`. Collision geometry is preferred over visual. Unsupported
//! elements (`transmission`, `gazebo`, `mimic`, sensors, dynamics) are
//! skipped with a recorded warning.

use roxmltree::{Document, Node};

use crate::geom::{RigidTransform, Vec3};
use crate::scalar::{real, Real};

use super::{
    quat_from_rpy, tessellate, GeometrySpec, Joint, JointKind, Link, RobotError, RobotModel,
};

pub(super) fn parse<R: Real>(text: &str) -> Result<RobotModel<R>, RobotError> {
    let doc = Document::parse(text).map_err(|e| RobotError::MalformedXml(e.to_string()))?;
    let robot = doc
        .root()
        .children()
        .find(|n| n.has_tag_name("robot"))
        .ok_or_else(|| RobotError::MalformedXml("missing <robot> root element".into()))?;

    let mut warnings = Vec::new();
    let mut links: Vec<Link<R>> = Vec::new();
    let mut joints_raw: Vec<(
        String,
        String,
        String,
        JointKind,
        RigidTransform<R>,
        Vec3<R>,
        Option<(R, R)>,
    )> = Vec::new();

    for node in robot.children().filter(Node::is_element) {
        match node.tag_name().name() {
            "link" => {
                let name = required_attr(&node, "name")?.to_string();
                let geometry = parse_link_geometry(&node, &name, &mut warnings)?;
                let mesh = geometry
                    .as_ref()
                    .and_then(|(spec, origin)| tessellate(spec).map(|m| m.transformed(origin)));
                links.push(Link {
                    name,
                    geometry,
                    mesh,
                });
            }
            "joint" => {
                joints_raw.push(parse_joint(&node, &mut warnings)?);
            }
            "transmission" | "gazebo" | "material" => {
                warnings.push(format!("ignored <{}> element", node.tag_name().name()));
            }
            other => {
                warnings.push(format!("ignored unsupported element <{other}>"));
            }
        }
    }

    // resolve joint link references
    let link_index = |name: &str| links.iter().position(|l| l.name == name);
    let mut joints = Vec::with_capacity(joints_raw.len());
    let mut is_child = vec![false; links.len()];
    for (name, parent, child, kind, origin, axis, limits) in joints_raw {
        let parent_idx = link_index(&parent).ok_or_else(|| RobotError::MissingLink {
            joint: name.clone(),
            link: parent.clone(),
        })?;
        let child_idx = link_index(&child).ok_or_else(|| RobotError::MissingLink {
            joint: name.clone(),
            link: child.clone(),
        })?;
        is_child[child_idx] = true;
        joints.push(Joint {
            name,
            kind,
            parent: parent_idx,
            child: child_idx,
            origin,
            axis,
            limits,
        });
    }

    // the root is the unique link that is never a joint child
    let mut roots = (0..links.len()).filter(|&l| !is_child[l]);
    let root = roots.next().ok_or(RobotError::CyclicKinematics)?;
    if roots.next().is_some() {
        return Err(RobotError::CyclicKinematics);
    }

    RobotModel::from_parts(links, joints, root, warnings)
}

type RawJoint<R> = (
    String,
    String,
    String,
    JointKind,
    RigidTransform<R>,
    Vec3<R>,
    Option<(R, R)>,
);

fn parse_joint<R: Real>(
    node: &Node,
    warnings: &mut Vec<String>,
) -> Result<RawJoint<R>, RobotError> {
    let name = required_attr(node, "name")?.to_string();
    let kind_str = required_attr(node, "type")?;
    let kind = match kind_str {
        "revolute" => JointKind::Revolute,
        "continuous" => JointKind::Revolute,
        "prismatic" => JointKind::Prismatic,
        "fixed" => JointKind::Fixed,
        other => {
            warnings.push(format!(
                "joint `{name}`: unsupported type `{other}` treated as fixed"
            ));
            JointKind::Fixed
        }
    };
    let mut parent = None;
    let mut child = None;
    let mut origin = RigidTransform::identity();
    let mut axis = Vec3::new(R::one(), R::zero(), R::zero());
    let mut limits = None;
    for sub in node.children().filter(Node::is_element) {
        match sub.tag_name().name() {
            "parent" => parent = Some(required_attr(&sub, "link")?.to_string()),
            "child" => child = Some(required_attr(&sub, "link")?.to_string()),
            "origin" => origin = parse_origin(&sub)?,
            "axis" => {
                let raw = parse_vec3(&sub, "xyz")?
                    .unwrap_or_else(|| Vec3::new(R::one(), R::zero(), R::zero()));
                axis = raw.normalized().ok_or_else(|| RobotError::NonUnitAxis {
                    joint: name.clone(),
                })?;
            }
            "limit" => {
                let lower = attr_scalar(&sub, "lower")?.unwrap_or_else(R::zero);
                let upper = attr_scalar(&sub, "upper")?.unwrap_or_else(R::zero);
                limits = Some((lower, upper));
            }
            "mimic" => {
                warnings.push(format!("joint `{name}`: <mimic> ignored"));
            }
            "dynamics" | "calibration" | "safety_controller" => {}
            other => warnings.push(format!("joint `{name}`: ignored <{other}>")),
        }
    }
    // continuous joints carry no limit element
    if kind_str == "continuous" {
        limits = None;
    }
    let parent = parent
        .ok_or_else(|| RobotError::MalformedXml(format!("joint `{name}` missing <parent>")))?;
    let child =
        child.ok_or_else(|| RobotError::MalformedXml(format!("joint `{name}` missing <child>")))?;
    Ok((name, parent, child, kind, origin, axis, limits))
}

fn parse_link_geometry<R: Real>(
    node: &Node,
    link_name: &str,
    warnings: &mut Vec<String>,
) -> Result<Option<(GeometrySpec<R>, RigidTransform<R>)>, RobotError> {
    // collision geometry preferred; visual is the fallback
    for tag in ["collision", "visual"] {
        if let Some(body) = node.children().find(|n| n.has_tag_name(tag)) {
            let origin = match body.children().find(|n| n.has_tag_name("origin")) {
                Some(o) => parse_origin(&o)?,
                None => RigidTransform::identity(),
            };
            let geometry = body
                .children()
                .find(|n| n.has_tag_name("geometry"))
                .ok_or_else(|| {
                    RobotError::MalformedXml(format!("link `{link_name}` {tag} missing <geometry>"))
                })?;
            for shape in geometry.children().filter(Node::is_element) {
                let spec = match shape.tag_name().name() {
                    "mesh" => {
                        if shape.attribute("scale").is_some() {
                            warnings
                                .push(format!("link `{link_name}`: mesh scale attribute ignored"));
                        }
                        GeometrySpec::MeshFile {
                            path: required_attr(&shape, "filename")?.to_string(),
                        }
                    }
                    "box" => {
                        let size = parse_vec3(&shape, "size")?.ok_or_else(|| {
                            RobotError::MalformedXml(format!("link `{link_name}` box missing size"))
                        })?;
                        GeometrySpec::Cuboid { size }
                    }
                    "sphere" => GeometrySpec::Sphere {
                        radius: attr_scalar(&shape, "radius")?.ok_or_else(|| {
                            RobotError::MalformedXml(format!(
                                "link `{link_name}` sphere missing radius"
                            ))
                        })?,
                    },
                    "cylinder" => GeometrySpec::Cylinder {
                        radius: attr_scalar(&shape, "radius")?.ok_or_else(|| {
                            RobotError::MalformedXml(format!(
                                "link `{link_name}` cylinder missing radius"
                            ))
                        })?,
                        length: attr_scalar(&shape, "length")?.ok_or_else(|| {
                            RobotError::MalformedXml(format!(
                                "link `{link_name}` cylinder missing length"
                            ))
                        })?,
                    },
                    other => {
                        warnings.push(format!("link `{link_name}`: ignored geometry <{other}>"));
                        continue;
                    }
                };
                return Ok(Some((spec, origin)));
            }
        }
    }
    Ok(None)
}

fn parse_origin<R: Real>(node: &Node) -> Result<RigidTransform<R>, RobotError> {
    let xyz = parse_vec3(node, "xyz")?.unwrap_or_else(Vec3::zero);
    let rpy = parse_vec3(node, "rpy")?.unwrap_or_else(Vec3::zero);
    Ok(RigidTransform::new(quat_from_rpy(rpy.x, rpy.y, rpy.z), xyz))
}

fn parse_vec3<R: Real>(node: &Node, attr: &str) -> Result<Option<Vec3<R>>, RobotError> {
    let Some(raw) = node.attribute(attr) else {
        return Ok(None);
    };
    let parts: Vec<&str> = raw.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(RobotError::MalformedXml(format!(
            "attribute {attr}=\"{raw}\" needs 3 values"
        )));
    }
    let mut vals = [R::zero(); 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = R::parse_decimal(p)
            .ok_or_else(|| RobotError::MalformedXml(format!("bad number `{p}` in {attr}")))?;
    }
    let _ = real::<R>(0.0);
    Ok(Some(Vec3::new(vals[0], vals[1], vals[2])))
}

fn attr_scalar<R: Real>(node: &Node, attr: &str) -> Result<Option<R>, RobotError> {
    match node.attribute(attr) {
        None => Ok(None),
        Some(raw) => R::parse_decimal(raw)
            .map(Some)
            .ok_or_else(|| RobotError::MalformedXml(format!("bad number `{raw}` in {attr}"))),
    }
}

fn required_attr<'a>(node: &'a Node, attr: &str) -> Result<&'a str, RobotError> {
    node.attribute(attr).ok_or_else(|| {
        RobotError::MalformedXml(format!(
            "<{}> missing required attribute `{attr}`",
            node.tag_name().name()
        ))
    })
}

/// Emit the supported URDF subset back out, so models survive a
/// write/parse round trip. Geometry origins and joint origins are written
/// as `xyz` + `rpy`.
pub(super) fn write<R: Real>(model: &RobotModel<R>) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("<robot name=\"model\">\n");
    for link in model.links() {
        if let Some((spec, origin)) = &link.geometry {
            let _ = writeln!(s, "  <link name=\"{}\">", link.name);
            s.push_str("    <collision>\n");
            let _ = writeln!(s, "      {}", origin_tag(origin));
            s.push_str("      <geometry>");
            match spec {
                GeometrySpec::MeshFile { path } => {
                    let _ = write!(s, "<mesh filename=\"{path}\"/>");
                }
                GeometrySpec::Cuboid { size } => {
                    let _ = write!(s, "<box size=\"{} {} {}\"/>", size.x, size.y, size.z);
                }
                GeometrySpec::Sphere { radius } => {
                    let _ = write!(s, "<sphere radius=\"{radius}\"/>");
                }
                GeometrySpec::Cylinder { radius, length } => {
                    let _ = write!(s, "<cylinder radius=\"{radius}\" length=\"{length}\"/>");
                }
            }
            s.push_str("</geometry>\n    </collision>\n  </link>\n");
        } else {
            let _ = writeln!(s, "  <link name=\"{}\"/>", link.name);
        }
    }
    for joint in model.joints() {
        let kind = match joint.kind {
            JointKind::Revolute if joint.limits.is_none() => "continuous",
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Fixed => "fixed",
        };
        let _ = writeln!(s, "  <joint name=\"{}\" type=\"{kind}\">", joint.name);
        let _ = writeln!(
            s,
            "    <parent link=\"{}\"/>",
            model.links()[joint.parent].name
        );
        let _ = writeln!(
            s,
            "    <child link=\"{}\"/>",
            model.links()[joint.child].name
        );
        let _ = writeln!(s, "    {}", origin_tag(&joint.origin));
        let _ = writeln!(
            s,
            "    <axis xyz=\"{} {} {}\"/>",
            joint.axis.x, joint.axis.y, joint.axis.z
        );
        if let Some((lo, hi)) = joint.limits {
            let _ = writeln!(s, "    <limit lower=\"{lo}\" upper=\"{hi}\"/>");
        }
        s.push_str("  </joint>\n");
    }
    s.push_str("</robot>\n");
    s
}

fn origin_tag<R: Real>(t: &RigidTransform<R>) -> String {
    let (roll, pitch, yaw) = rpy_from_quat(t.rotation);
    format!(
        "<origin xyz=\"{} {} {}\" rpy=\"{roll} {pitch} {yaw}\"/>",
        t.translation.x, t.translation.y, t.translation.z
    )
}

/// Fixed-axis roll/pitch/yaw from a rotation (inverse of `quat_from_rpy`).
fn rpy_from_quat<R: Real>(q: crate::geom::Quat<R>) -> (R, R, R) {
    let m = q.to_matrix();
    let pitch = (-m[2][0]).max(-R::one()).min(R::one()).asin();
    // gimbal lock: fold roll into yaw
    if m[2][0].abs() > R::one() - real::<R>(1e-12) {
        let yaw = (-m[0][1]).atan2(m[1][1]);
        (R::zero(), pitch, yaw)
    } else {
        let roll = m[2][1].atan2(m[2][2]);
        let yaw = m[1][0].atan2(m[0][0]);
        (roll, pitch, yaw)
    }
}
