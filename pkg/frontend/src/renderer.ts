// WebGL2 renderer: nodes as instanced camera-facing quads, selection edges
// as weight-scaled lines, labels as screen-space overlay divs anchored in 3D.

import { FlyCamera, projectToScreen } from './camera.js';
import { ViewFrame } from './connection.js';
import { SegmentWire } from './protocol.js';

const NODE_VS = `#version 300 es
layout(location=0) in vec2 corner;
layout(location=1) in vec3 center;
layout(location=2) in vec3 color;
layout(location=3) in float scale;
uniform mat4 viewProjection;
uniform vec3 cameraRight;
uniform vec3 cameraUp;
out vec3 vColor;
void main() {
  vec3 world = center + (cameraRight * corner.x + cameraUp * corner.y) * scale;
  gl_Position = viewProjection * vec4(world, 1.0);
  vColor = color;
}`;

const NODE_FS = `#version 300 es
precision mediump float;
in vec3 vColor;
out vec4 outColor;
void main() { outColor = vec4(vColor, 1.0); }`;

// Edges are camera-facing ribbons so their width can scale with edge weight;
// plain GL lines ignore width on most drivers.
const EDGE_VS = `#version 300 es
layout(location=0) in vec2 corner;   // x selects the endpoint, y the side
layout(location=1) in vec3 endA;
layout(location=2) in vec3 endB;
layout(location=3) in vec3 color;
layout(location=4) in float thickness;
uniform mat4 viewProjection;
uniform vec3 cameraForward;
uniform float maxWidth;
out vec3 vColor;
void main() {
  vec3 axis = endB - endA;
  vec3 side = cross(axis, cameraForward);
  float len = length(side);
  side = len > 1e-6 ? side / len : vec3(0.0);
  vec3 world = mix(endA, endB, corner.x) + side * (corner.y * thickness * maxWidth);
  gl_Position = viewProjection * vec4(world, 1.0);
  vColor = color;
}`;

const EDGE_FS = NODE_FS;

export class Renderer {
  private gl: WebGL2RenderingContext;
  private nodeProgram: WebGLProgram;
  private edgeProgram: WebGLProgram;
  private quadBuffer: WebGLBuffer;
  private instanceBuffer: WebGLBuffer;
  private edgeCornerBuffer: WebGLBuffer;
  private edgeBuffer: WebGLBuffer;
  private nodeVao: WebGLVertexArrayObject;
  private edgeVao: WebGLVertexArrayObject;
  private instanceCount = 0;
  private segmentCount = 0;
  private segments: SegmentWire[] = [];

  constructor(private canvas: HTMLCanvasElement, private labelLayer: HTMLElement) {
    const gl = canvas.getContext('webgl2');
    if (!gl) throw new Error('WebGL2 is required');
    this.gl = gl;
    this.nodeProgram = buildProgram(gl, NODE_VS, NODE_FS);
    this.edgeProgram = buildProgram(gl, EDGE_VS, EDGE_FS);
    this.quadBuffer = gl.createBuffer()!;
    this.instanceBuffer = gl.createBuffer()!;
    this.edgeCornerBuffer = gl.createBuffer()!;
    this.edgeBuffer = gl.createBuffer()!;
    this.nodeVao = gl.createVertexArray()!;
    this.edgeVao = gl.createVertexArray()!;
    this.setupNodeVao();
    this.setupEdgeVao();
    gl.enable(gl.DEPTH_TEST);
    gl.clearColor(0.04, 0.05, 0.09, 1.0);
  }

  /** Upload a frame's geometry. Segment deltas append; resets replace. */
  loadFrame(frame: ViewFrame): void {
    const { header, nodes } = frame;
    const count = nodes.ids.length;
    const stride = 7; // xyz rgb scale
    const data = new Float32Array(count * stride);
    for (let i = 0; i < count; i++) {
      data[i * stride] = nodes.positions[i * 3];
      data[i * stride + 1] = nodes.positions[i * 3 + 1];
      data[i * stride + 2] = nodes.positions[i * 3 + 2];
      data[i * stride + 3] = nodes.colors[i * 3];
      data[i * stride + 4] = nodes.colors[i * 3 + 1];
      data[i * stride + 5] = nodes.colors[i * 3 + 2];
      data[i * stride + 6] = nodes.scales[i];
    }
    const gl = this.gl;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.instanceBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, data, gl.DYNAMIC_DRAW);
    this.instanceCount = count;

    this.segments = header.segments_reset
      ? header.segments.slice()
      : this.segments.concat(header.segments);
    this.uploadSegments();
  }

  private uploadSegments(): void {
    const gl = this.gl;
    const data = new Float32Array(this.segments.length * 10);
    let o = 0;
    for (const seg of this.segments) {
      data.set(seg.a, o); data.set(seg.b, o + 3);
      data.set(seg.color, o + 6); data[o + 9] = seg.thickness;
      o += 10;
    }
    gl.bindBuffer(gl.ARRAY_BUFFER, this.edgeBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, data, gl.DYNAMIC_DRAW);
    this.segmentCount = this.segments.length;
  }

  draw(camera: FlyCamera, labels: [string, [number, number, number]][]): void {
    const gl = this.gl;
    const width = this.canvas.width;
    const height = this.canvas.height;
    gl.viewport(0, 0, width, height);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    const vp = camera.viewProjection(width / height);

    const r = camera.right();
    const f = camera.forward();

    if (this.segmentCount > 0) {
      gl.useProgram(this.edgeProgram);
      gl.uniformMatrix4fv(
        gl.getUniformLocation(this.edgeProgram, 'viewProjection'), false, vp);
      gl.uniform3f(gl.getUniformLocation(this.edgeProgram, 'cameraForward'), f.x, f.y, f.z);
      gl.uniform1f(gl.getUniformLocation(this.edgeProgram, 'maxWidth'), 0.35);
      gl.bindVertexArray(this.edgeVao);
      gl.drawArraysInstanced(gl.TRIANGLE_STRIP, 0, 4, this.segmentCount);
    }

    if (this.instanceCount > 0) {
      gl.useProgram(this.nodeProgram);
      gl.uniformMatrix4fv(
        gl.getUniformLocation(this.nodeProgram, 'viewProjection'), false, vp);
      gl.uniform3f(gl.getUniformLocation(this.nodeProgram, 'cameraRight'), r.x, r.y, r.z);
      const ux = r.y * f.z - r.z * f.y; // up = right x forward
      const uy = r.z * f.x - r.x * f.z;
      const uz = r.x * f.y - r.y * f.x;
      gl.uniform3f(gl.getUniformLocation(this.nodeProgram, 'cameraUp'), ux, uy, uz);
      gl.bindVertexArray(this.nodeVao);
      gl.drawArraysInstanced(gl.TRIANGLE_STRIP, 0, 4, this.instanceCount);
    }
    gl.bindVertexArray(null);

    this.drawLabels(vp, labels, width, height);
  }

  private drawLabels(
    vp: Float32Array, labels: [string, [number, number, number]][],
    width: number, height: number,
  ): void {
    this.labelLayer.textContent = '';
    for (const [text, anchor] of labels) {
      const at = projectToScreen(vp, anchor, width, height);
      if (!at) continue;
      const div = document.createElement('div');
      div.className = 'node-label';
      div.textContent = text;
      div.style.left = `${at.x.toFixed(1)}px`;
      div.style.top = `${at.y.toFixed(1)}px`;
      this.labelLayer.appendChild(div);
    }
  }

  private setupNodeVao(): void {
    const gl = this.gl;
    gl.bindVertexArray(this.nodeVao);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.quadBuffer);
    gl.bufferData(gl.ARRAY_BUFFER,
      new Float32Array([-0.5, -0.5, 0.5, -0.5, -0.5, 0.5, 0.5, 0.5]), gl.STATIC_DRAW);
    gl.enableVertexAttribArray(0);
    gl.vertexAttribPointer(0, 2, gl.FLOAT, false, 0, 0);

    gl.bindBuffer(gl.ARRAY_BUFFER, this.instanceBuffer);
    const stride = 28;
    gl.enableVertexAttribArray(1);
    gl.vertexAttribPointer(1, 3, gl.FLOAT, false, stride, 0);
    gl.vertexAttribDivisor(1, 1);
    gl.enableVertexAttribArray(2);
    gl.vertexAttribPointer(2, 3, gl.FLOAT, false, stride, 12);
    gl.vertexAttribDivisor(2, 1);
    gl.enableVertexAttribArray(3);
    gl.vertexAttribPointer(3, 1, gl.FLOAT, false, stride, 24);
    gl.vertexAttribDivisor(3, 1);
    gl.bindVertexArray(null);
  }

  private setupEdgeVao(): void {
    const gl = this.gl;
    gl.bindVertexArray(this.edgeVao);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.edgeCornerBuffer);
    gl.bufferData(gl.ARRAY_BUFFER,
      new Float32Array([0, -0.5, 1, -0.5, 0, 0.5, 1, 0.5]), gl.STATIC_DRAW);
    gl.enableVertexAttribArray(0);
    gl.vertexAttribPointer(0, 2, gl.FLOAT, false, 0, 0);

    gl.bindBuffer(gl.ARRAY_BUFFER, this.edgeBuffer);
    const stride = 40; // endA endB rgb thickness
    gl.enableVertexAttribArray(1);
    gl.vertexAttribPointer(1, 3, gl.FLOAT, false, stride, 0);
    gl.vertexAttribDivisor(1, 1);
    gl.enableVertexAttribArray(2);
    gl.vertexAttribPointer(2, 3, gl.FLOAT, false, stride, 12);
    gl.vertexAttribDivisor(2, 1);
    gl.enableVertexAttribArray(3);
    gl.vertexAttribPointer(3, 3, gl.FLOAT, false, stride, 24);
    gl.vertexAttribDivisor(3, 1);
    gl.enableVertexAttribArray(4);
    gl.vertexAttribPointer(4, 1, gl.FLOAT, false, stride, 36);
    gl.vertexAttribDivisor(4, 1);
    gl.bindVertexArray(null);
  }
}

function buildProgram(gl: WebGL2RenderingContext, vsSource: string, fsSource: string): WebGLProgram {
  const program = gl.createProgram()!;
  for (const [kind, source] of [[gl.VERTEX_SHADER, vsSource], [gl.FRAGMENT_SHADER, fsSource]] as const) {
    const shader = gl.createShader(kind)!;
    gl.shaderSource(shader, source);
    gl.compileShader(shader);
    if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
      throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
    }
    gl.attachShader(program, shader);
  }
  gl.linkProgram(program);
  if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
    throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
  }
  return program;
}
