/** three.js scene: model rendering, orbit, lasso capture, run overlays. */

import * as THREE from "three";

import type { Camera, ScreenPoint } from "./lasso";
import type { ConduitLine } from "./overlays";
import type { MeshDocument } from "./types";

export class Viewer {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private model: THREE.Mesh | null = null;
  private highlights = new THREE.Group();
  private overlays = new THREE.Group();
  private geometry: THREE.BufferGeometry | null = null;

  constructor(private canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(45, canvas.width / canvas.height, 0.1, 5000);
    this.scene.background = new THREE.Color(0xf4f4f4);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 0.8);
    sun.position.set(1, 1, 2);
    this.scene.add(sun);
    this.scene.add(this.highlights);
    this.scene.add(this.overlays);
  }

  loadMesh(doc: MeshDocument): void {
    if (this.model) this.scene.remove(this.model);
    const geo = new THREE.BufferGeometry();
    const pos = new Float32Array(doc.triangles.length * 9);
    doc.triangles.forEach((tri, i) => {
      tri.forEach((vi, j) => {
        const v = doc.vertices[vi];
        pos.set(v, i * 9 + j * 3);
      });
    });
    geo.setAttribute("position", new THREE.BufferAttribute(pos, 3));
    geo.computeVertexNormals();
    this.geometry = geo;
    this.model = new THREE.Mesh(
      geo,
      new THREE.MeshLambertMaterial({ color: 0xcfcfcf, side: THREE.DoubleSide }),
    );
    this.scene.add(this.model);
    geo.computeBoundingSphere();
    const bs = geo.boundingSphere!;
    this.camera.position.set(bs.center.x, bs.center.y, bs.center.z + bs.radius * 2.6);
    this.camera.lookAt(bs.center);
  }

  /** Snapshot of the current view in the lasso module's conventions. */
  lassoCamera(): Camera {
    this.camera.updateMatrixWorld();
    const vp = new THREE.Matrix4().multiplyMatrices(
      this.camera.projectionMatrix,
      this.camera.matrixWorldInverse,
    );
    return {
      viewProjection: vp.toArray(),
      eye: this.camera.position.toArray() as [number, number, number],
      width: this.canvas.width,
      height: this.canvas.height,
    };
  }

  highlightTriangles(doc: MeshDocument, ids: number[], color: number): void {
    const geo = new THREE.BufferGeometry();
    const pos = new Float32Array(ids.length * 9);
    ids.forEach((ti, i) => {
      doc.triangles[ti].forEach((vi, j) => pos.set(doc.vertices[vi], i * 9 + j * 3));
    });
    geo.setAttribute("position", new THREE.BufferAttribute(pos, 3));
    const mesh = new THREE.Mesh(
      geo,
      new THREE.MeshBasicMaterial({ color, transparent: true, opacity: 0.75 }),
    );
    this.highlights.add(mesh);
  }

  clearHighlights(): void {
    this.highlights.clear();
  }

  drawConduits(lines: ConduitLine[]): void {
    this.overlays.clear();
    for (const line of lines) {
      const pts = line.points.map((p) => new THREE.Vector3(...p));
      const geo = new THREE.BufferGeometry().setFromPoints(pts);
      this.overlays.add(
        new THREE.Line(geo, new THREE.LineBasicMaterial({ color: new THREE.Color(line.color) })),
      );
    }
  }

  orbit(dx: number, dy: number): void {
    const bs = this.geometry?.boundingSphere;
    const center = bs ? bs.center : new THREE.Vector3();
    const offset = this.camera.position.clone().sub(center);
    const sph = new THREE.Spherical().setFromVector3(offset);
    sph.theta -= dx * 0.01;
    sph.phi = Math.min(Math.PI - 0.05, Math.max(0.05, sph.phi - dy * 0.01));
    this.camera.position.copy(center).add(new THREE.Vector3().setFromSpherical(sph));
    this.camera.lookAt(center);
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }

  /** Convert canvas mouse events into lasso screen points. */
  static screenPoint(ev: MouseEvent, canvas: HTMLCanvasElement): ScreenPoint {
    const r = canvas.getBoundingClientRect();
    return {
      x: ((ev.clientX - r.left) / r.width) * canvas.width,
      y: ((ev.clientY - r.top) / r.height) * canvas.height,
    };
  }
}
