/** three.js view: drone, leash, dashed trajectory, scene objects, camera.
 *
 * Simulation coordinates are kept as-is (z up); the camera's up vector is
 * set accordingly instead of remapping axes. Everything rendered here comes
 * from received frames; no physics runs on the client.
 */

import * as THREE from "three";
import type { SceneObj, StateFrame, Vec3 } from "./protocol.js";
import type { PointerRay } from "./dragmap.js";

const DRONE_COLOR = 0x2a6fd6;
const DRONE_HILITE = 0x6fa8ff;
const OBJECT_COLOR = 0x4682b4;
const GRABBED_COLOR = 0xd6a12a;

export class SceneView {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;

  private readonly drone: THREE.Group;
  private readonly droneBody: THREE.MeshStandardMaterial;
  private readonly setpointMark: THREE.Mesh;
  private readonly handMark: THREE.Mesh;
  private readonly leash: THREE.Line;
  private readonly leashGeom = new THREE.BufferGeometry();
  private readonly trajLine: THREE.Line;
  private readonly trajGeom = new THREE.BufferGeometry();
  private readonly endpointMark: THREE.Mesh;
  private readonly objects = new Map<string, THREE.Mesh>();
  private readonly raycaster = new THREE.Raycaster();

  // orbit state: spherical around a focus point
  private focus = new THREE.Vector3(2, 0, 1);
  private azimuth = -2.4;
  private elevation = 0.35;
  private distance = 7;

  constructor(private readonly container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    container.appendChild(this.renderer.domElement);

    this.camera = new THREE.PerspectiveCamera(55, 1, 0.01, 500);
    this.camera.up.set(0, 0, 1);

    this.scene.background = new THREE.Color(0x10141c);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(4, -6, 10);
    this.scene.add(sun);

    const grid = new THREE.GridHelper(40, 40, 0x2c3442, 0x1d2430);
    grid.rotation.x = Math.PI / 2; // grid lives in the xy ground plane, z up
    this.scene.add(grid);

    this.drone = new THREE.Group();
    this.droneBody = new THREE.MeshStandardMaterial({ color: DRONE_COLOR });
    const hull = new THREE.Mesh(new THREE.BoxGeometry(0.16, 0.16, 0.05), this.droneBody);
    this.drone.add(hull);
    const armMat = new THREE.MeshStandardMaterial({ color: 0x888f9c });
    for (const [ax, ay] of [[1, 1], [1, -1], [-1, 1], [-1, -1]] as const) {
      const rotor = new THREE.Mesh(new THREE.CylinderGeometry(0.05, 0.05, 0.01, 16), armMat);
      rotor.rotation.x = Math.PI / 2;
      rotor.position.set(0.1 * ax, 0.1 * ay, 0.03);
      this.drone.add(rotor);
    }
    this.scene.add(this.drone);

    this.setpointMark = new THREE.Mesh(
      new THREE.SphereGeometry(0.02, 12, 12),
      new THREE.MeshBasicMaterial({ color: 0x5a6375 }));
    this.scene.add(this.setpointMark);

    this.handMark = new THREE.Mesh(
      new THREE.SphereGeometry(0.03, 12, 12),
      new THREE.MeshBasicMaterial({ color: 0xe0e4ea }));
    this.handMark.visible = false;
    this.scene.add(this.handMark);

    this.leash = new THREE.Line(
      this.leashGeom, new THREE.LineBasicMaterial({ color: 0xcf5656 }));
    this.leash.visible = false;
    this.scene.add(this.leash);

    this.trajLine = new THREE.Line(
      this.trajGeom,
      new THREE.LineDashedMaterial({ color: 0x9fd65e, dashSize: 0.2, gapSize: 0.12 }));
    this.trajLine.visible = false;
    this.scene.add(this.trajLine);

    this.endpointMark = new THREE.Mesh(
      new THREE.SphereGeometry(0.05, 12, 12),
      new THREE.MeshBasicMaterial({ color: 0x9fd65e }));
    this.endpointMark.visible = false;
    this.scene.add(this.endpointMark);

    this.resize();
    window.addEventListener("resize", () => this.resize());
  }

  resize(): void {
    const w = this.container.clientWidth || window.innerWidth;
    const h = this.container.clientHeight || window.innerHeight;
    this.renderer.setSize(w, h);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  setObjects(objs: SceneObj[]): void {
    const seen = new Set<string>();
    for (const o of objs) {
      seen.add(o.id);
      let mesh = this.objects.get(o.id);
      if (mesh === undefined) {
        mesh = new THREE.Mesh(
          new THREE.SphereGeometry(o.radius, 20, 20),
          new THREE.MeshStandardMaterial({ color: OBJECT_COLOR }));
        this.objects.set(o.id, mesh);
        this.scene.add(mesh);
      }
      mesh.position.set(o.center[0], o.center[1], o.center[2]);
      (mesh.material as THREE.MeshStandardMaterial).color.setHex(
        o.grabbed ? GRABBED_COLOR : OBJECT_COLOR);
    }
    for (const [id, mesh] of this.objects) {
      if (!seen.has(id)) {
        this.scene.remove(mesh);
        this.objects.delete(id);
      }
    }
  }

  /** Apply a received state frame; a frame without a trajectory keeps the
   * previous polyline on screen (delta protocol). */
  applyFrame(frame: StateFrame): void {
    this.setPose(frame.drone.pos, frame.setpoint, frame.hand, frame.grab);
    this.setObjects(frame.objects);
    if (frame.trajectory !== undefined) this.setTrajectory(frame.trajectory);
  }

  /** Minimal pose update used by both live frames and log replay. */
  setPose(dronePos: Vec3, setpoint: Vec3, hand: Vec3, grab: boolean): void {
    this.drone.position.set(dronePos[0], dronePos[1], dronePos[2]);
    this.setpointMark.position.set(setpoint[0], setpoint[1], setpoint[2]);
    this.handMark.position.set(hand[0], hand[1], hand[2]);
    this.handMark.visible = grab;
    this.leash.visible = grab;
    if (grab) {
      const attach: Vec3 = [dronePos[0], dronePos[1], dronePos[2] - 0.02];
      this.leashGeom.setFromPoints([
        new THREE.Vector3(...hand), new THREE.Vector3(...attach)]);
    }
  }

  setTrajectory(points: Vec3[]): void {
    if (points.length < 2) {
      this.trajLine.visible = false;
      this.endpointMark.visible = false;
      return;
    }
    this.trajGeom.setFromPoints(points.map((p) => new THREE.Vector3(...p)));
    this.trajLine.computeLineDistances();
    this.trajLine.visible = true;
    const end = points[points.length - 1]!;
    this.endpointMark.position.set(end[0], end[1], end[2]);
    this.endpointMark.visible = true;
  }

  clearTrajectory(): void {
    this.trajLine.visible = false;
    this.endpointMark.visible = false;
  }

  setDroneHighlight(on: boolean): void {
    this.droneBody.color.setHex(on ? DRONE_HILITE : DRONE_COLOR);
  }

  /** Pointer ray in sim coordinates for the drag mapping. */
  pointerRay(clientX: number, clientY: number): PointerRay {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1);
    this.raycaster.setFromCamera(ndc, this.camera);
    const o = this.raycaster.ray.origin;
    const d = this.raycaster.ray.direction;
    return { origin: [o.x, o.y, o.z], dir: [d.x, d.y, d.z] };
  }

  /** Screen-space distance in pixels from the pointer to the drone marker. */
  droneScreenDistance(clientX: number, clientY: number): number {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const p = this.drone.position.clone().project(this.camera);
    const sx = rect.left + ((p.x + 1) / 2) * rect.width;
    const sy = rect.top + ((1 - p.y) / 2) * rect.height;
    return Math.hypot(clientX - sx, clientY - sy);
  }

  orbit(dxPx: number, dyPx: number): void {
    this.azimuth -= dxPx * 0.008;
    this.elevation = Math.min(1.45, Math.max(-0.2, this.elevation + dyPx * 0.006));
  }

  zoom(delta: number): void {
    this.distance = Math.min(60, Math.max(1.5, this.distance * Math.exp(delta * 0.001)));
  }

  recenter(): void {
    this.focus.set(2, 0, 1);
    this.azimuth = -2.4;
    this.elevation = 0.35;
    this.distance = 7;
  }

  /** Aim the camera at the midpoint of the action during flight. */
  follow(target: Vec3): void {
    this.focus.lerp(new THREE.Vector3(target[0], target[1], target[2] + 0.5), 0.02);
  }

  render(): void {
    const ce = Math.cos(this.elevation);
    this.camera.position.set(
      this.focus.x + this.distance * ce * Math.cos(this.azimuth),
      this.focus.y + this.distance * ce * Math.sin(this.azimuth),
      this.focus.z + this.distance * Math.sin(this.elevation));
    this.camera.lookAt(this.focus);
    this.renderer.render(this.scene, this.camera);
  }
}
