"""Prompt text for the two agent stages.

The strings are fixed verbatim: programs are extracted and executed against
this exact tool surface, so the wording is part of the interface contract.
"""

TASK_DESCRIPTION = """
    You are now asked to solve a spatial reasoning related problem.
    The input are image(s) and a natural langugae question that
    specifically designed to test your spatial reasoning ability.
    It is not trivial to solve these tasks directly as a vision
    langugae model. However, You have access to the following Python API:
"""

API_SPECIFICATION = """
    In the PySpatial API, we explicitly introduce the 3D inductive bias.
    We provide a Scene class that contains the image(s) and a question.
    Further, we also provide a 3D reconstruction process that can be
    used to generate a 3D point cloud and camera parameters.

    class Reconstruction:
        def __init__(self, point_cloud, extrinsics, intrinsics):
            self.point_cloud = point_cloud
            self.extrinsics = extrinsics
            self.intrinsics = intrinsics


    class Scene:
        "Simple scene class that holds image data."
        def __init__(self, path_to_images: Union[str, List[str]],
                                                 question: str = ""):
            self.question = question
            self.images = self._load_images(path_to_images)
            self.reconstruction : Reconstruction = None

        def _load_images(self, path_to_images: Union[str, List[str]])
                                                    -> List[str]:
            "Load image paths from directory or list."
            if isinstance(path_to_images, str):
                if os.path.isdir(path_to_images):
                    # Load all images from directory
                    image_extensions = ['*.png', '*.jpg', '*.jpeg']
                    images = []
                    for ext in image_extensions:
                        images.extend(glob.glob(os.path.join(
                                        path_to_images, ext)))
                    return sorted(images)
                else:
                    # Single image file
                    return [path_to_images]
            else:
                # List of image paths
                return list(path_to_images)

    class pySpatial:
        "Simple interface for 3D vision tools."
        # we disable other function for now

        @staticmethod
        def reconstruct(scene: Scene):
            "3D reconstruction from scene images."

            return reconstruct_3d(scene.images)

        @staticmethod
        def describe_camera_motion(recon: Reconstruction):
            "Describe camera motion from reconstruction results.
            Args:
            "
            extrinsics = recon.extrinsics
            return describe_camera_motion(extrinsics)

        @staticmethod
        def synthesize_novel_view(recon: Reconstruction,
                                  new_camera_pose):
            "Generate novel view synthesis from reconstruction results.
            Args:
            "
            return novel_view_synthesis(recon)

        # methods to manipulate camera pose
        def rotate_right(extrinsic, angle=45):

        def rotate_left(extrinsic, angle=45):

        def move_forward(extrinsic, distance=0.3):

        def move_backward(extrinsic, distance=0.3):

        def turn_around(extrinsic):


        @staticmethod
        def estimate_depth(image):
            return estimate_depth(image)
"""

_EXAMPLE_1 = """
    Problem 1:
    Question: "Based on these two views showing the same scene:
    in which direction did I move from the first view to the
    second view?
    A. Diagonally forward and left
    B. Directly right
    C. Directly left
    D. Diagonally forward and right"

    How to solve this problem?
    Step 1: we can easily find the ansewr with camera extrinsics.
    Step 2: therefore, we should first reconstruct the scene,
    and then use the camera extrinsics to find the answer.
    Step 3: it is still not trivial to directly get the answer
    from extrinsic matrix.
    Step 4: we can use the pySpatial.describe_camera_motion
    to get the answer.
    Next, write python code within the pySpatial API provided,
    then an agent will automatically collect the code
    I wrote and execute it.

    ```python
    def program(input_scene: Scene):
        reconstruction3D = pySpatial.reconstruct(input_scene)
        camera_motion = pySpatial.describe_camera_motion(
                        reconstruction3D)
        return camera_motion
    ```
    Step 5: After I get the visual clue from execution,
    I can easily match the answer:
"""

_EXAMPLE_2 = """
    Problem 2:
    Based on these four images (image 1, 2, 3, and 4)
    showing the pink bottle from different viewpoints (front, left, back,
    and right),with each camera aligned with room walls and partially
    capturing the surroundings: If I am standing at the same spot and
    facing the same direction as shown in image 1, then I turn right
    and move forward, will I get closer to the pink plush toy
    and headboard?

    since we do not have the way to compare distance in 3D space,
    we can render two images, and use these two images as visual clue.
    ```python

    def program(input_scene: Scene):

        reconstructed_scene = pySpatial.reconstruct(input_scene)
        base_viewpoint = reconstructed_scene.extrinsics[0]
        # the image 1 indicates the 0th index in the array

        viewpoint_turn_right = pySpatial.rotate_right(base_viewpoint)
        viewpoint_move_forward = pySpatial.move_forward(viewpoint_turn_right)

        image_right = pySpatial.synthesize_novel_view(reconstructed_scene, viewpoint_turn_right)
        image_forward = pySpatial.synthesize_novel_view(reconstructed_scene, viewpoint_move_forward)

        # we should compare these two images, check if the object
        # exists and if the distance is closer.
        visual_clue = [image_right, image_forward]
        return visual_clue
    ```
"""

_EXAMPLE_3 = """
    Problem 3:
    Question: "Based on these three views walking through a room:
    what would I see if I turned around at the final viewpoint?"

    The question asks about the view behind the last camera. We can
    reconstruct the scene, take the last camera pose, turn it around,
    and render the novel view as the visual clue.
    ```python
    def program(input_scene: Scene):
        reconstruction = pySpatial.reconstruct(input_scene)
        last_viewpoint = reconstruction.extrinsics[len(reconstruction.extrinsics) - 1]
        # turn_around rotates the camera by 180 degrees in place
        viewpoint_behind = pySpatial.turn_around(last_viewpoint)
        visual_clue = pySpatial.synthesize_novel_view(reconstruction, viewpoint_behind)
        return visual_clue
    ```
"""

_EXAMPLE_4 = """
    Problem 4:
    Question: "Based on these views: sweep the scene around the first
    viewpoint so I can see the whole surroundings."

    We can rotate the first camera in 45 degree steps and render each
    novel view, collecting all of them as the visual clue.
    ```python
    def program(input_scene: Scene):
        reconstruction = pySpatial.reconstruct(input_scene)
        viewpoint = reconstruction.extrinsics[0]
        visual_clue = []
        for i in range(8):
            # each step pans the camera 45 degrees to the right
            viewpoint = pySpatial.rotate_right(viewpoint)
            visual_clue.append(pySpatial.synthesize_novel_view(reconstruction, viewpoint))
        return visual_clue
    ```
"""

# Ordered pool of in-context examples; a config picks the first 0, 2, or 4.
EXAMPLE_PROBLEMS = [_EXAMPLE_1, _EXAMPLE_2, _EXAMPLE_3, _EXAMPLE_4]

CODE_GENERATION_PROMPT = """
    Now please utilize the PySpatial API and write a python function
    to solve the problem.
    Noted that you can first do reasoning and then write the code.
    But the code should be wrapped in the ```python ``` block.
    Write a compact code block
    Also, the function written should be named as program
    and the input parameter should be a Scene object.
    for example,
    ```python
    def program(input_scene: Scene):
        ...
        return ...
    ```
    try to add simple comments to the code to explain your logic.

    Make sure to first reasoning, why we write program like this,
    becuase we have a pySpatial API that allows us to explore the 3D
    space, please first do a reasoning like (I want to know what is
    to the right of something, therefore I just render a novel view
    from that).
"""

ANSWER_BACKGROUND = f"""
    We are now solving a spatial reasoing problem.
    It is not trivial to solve these tasks directly as a vision language
    model.
    However, We have access to the following PySpatial API:
    {API_SPECIFICATION}

    We generate a python code based on the PySpatial API to solve
    this problem.
"""

ANSWER_PROMPT = """
    Based on the code and the visual clue from the execution, answer
    the question.
"""

WITHOUT_VISUAL_CLUE_BACKGROUND = """
    Solve this spatial reasoning problem based on the question
    and the image input.

    First, analyze the question, extract useful information from
    the question description, then try to answer it based on the
    useful visual information.

    Give your best guess if you cannot find the best answer.
"""
